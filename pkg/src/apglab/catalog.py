"""Built-in smooth terms, proximal terms, and named problem instances.

Problems are addressable from run-configuration files by name:
``quadratic``, ``lasso``, ``affine-descent``, ``unattained``. Nonsmooth
terms usable in the ``g`` field of a problem spec: ``zero``, ``l1``,
``box``.

Randomized instances (the lasso designs) take an explicit seed so that
every run is reproducible byte for byte.
"""

import math
from typing import Optional

import numpy as np

from .errors import ParameterError
from .problem import CompositeProblem, NonsmoothTerm, SmoothTerm

PROBLEM_NAMES = ("quadratic", "lasso", "affine-descent", "unattained")
NONSMOOTH_NAMES = ("zero", "l1", "box")

# Default design knobs for the lasso family. The column-scale spread sets
# the curvature range of the design; 1e2 puts the plain-iteration fixed
# point of the d = 10 reference instance in the low thousands, late enough
# that sublinear-rate diagnostics see several live decades and early
# enough that reference solves finish at machine precision.
LASSO_ROW_FACTOR = 2
LASSO_LAM_SCALE = 0.1
LASSO_CONDITION = 1e2


def power_iteration(matrix: np.ndarray, rel_tol: float = 1e-12, max_iters: int = 200_000) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix.

    Deterministic start vector; stops when the Rayleigh quotient is stable
    to ``rel_tol`` in relative terms. Kept dependency-free on purpose: the
    dense eigensolver stays in the test suite as an independent check.
    """
    m = np.asarray(matrix, dtype=float)
    d = m.shape[0]
    v = 1.0 + np.arange(d) / max(d, 1)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iters):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        new_lam = float(v @ w)
        v = w / norm
        if abs(new_lam - lam) <= rel_tol * max(abs(new_lam), 1e-300):
            return abs(new_lam)
        lam = new_lam
    return abs(lam)


def _quadratic_form(q: np.ndarray, c: np.ndarray, constant: float, beta: float, name: str) -> SmoothTerm:
    q = q.copy()
    q.flags.writeable = False
    c = c.copy()
    c.flags.writeable = False

    def value(x):
        return 0.5 * float(x @ (q @ x)) - float(c @ x) + constant

    def gradient(x):
        return q @ x - c

    return SmoothTerm(value=value, gradient=gradient, beta=beta, name=name)


def make_quadratic(a, b) -> SmoothTerm:
    """f(x) = <Ax, x>/2 - <b, x> for symmetric positive semidefinite A.

    beta is the largest eigenvalue of A, computed by power iteration to a
    relative tolerance of 1e-12.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"quadratic: A must be square, got shape {a.shape}")
    if b.shape != (a.shape[0],):
        raise ParameterError(f"quadratic: b shape {b.shape} does not match A {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.T))) > 1e-12 * scale:
        raise ParameterError("quadratic: A is not symmetric")
    beta = power_iteration(a)
    if beta <= 0.0:
        raise ParameterError("quadratic: A has no positive curvature, beta would be 0")
    return _quadratic_form(a, b, 0.0, beta, "quadratic")


def make_least_squares(design, targets) -> SmoothTerm:
    """f(x) = ||Ax - y||^2 / 2, precomputed through its normal matrix."""
    a = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if a.ndim != 2 or y.shape != (a.shape[0],):
        raise ParameterError(f"least squares: incompatible shapes {a.shape} and {y.shape}")
    q = a.T @ a
    c = a.T @ y
    constant = 0.5 * float(y @ y)
    beta = power_iteration(q)
    if beta <= 0.0:
        raise ParameterError("least squares: design has rank 0")
    return _quadratic_form(q, c, constant, beta, "least-squares")


def make_affine_descent() -> SmoothTerm:
    """f(x) = -x in one dimension: steepest descent never stops.

    The gradient is constant, so any positive beta is a valid Lipschitz
    declaration; 1.0 keeps the default step size at gamma = 1.
    """

    def value(x):
        return -float(x[0])

    def gradient(x):
        return np.array([-1.0])

    return SmoothTerm(value=value, gradient=gradient, beta=1.0, name="affine-descent")


def make_unattained_infimum() -> SmoothTerm:
    """f(x) = sqrt(1 + x^2) - x: infimum 0 at x -> +inf, never attained.

    Values are computed through the cancellation-free form
    1 / (sqrt(1 + x^2) + x) for x >= 0, and the gradient through
    -f(x) / sqrt(1 + x^2), so the term stays accurate far out on the
    minimizing ray. The curvature (1 + x^2)^(-3/2) is at most 1, hence
    beta = 1.
    """

    def _value_scalar(t: float) -> float:
        r = math.hypot(1.0, t)
        if t >= 0.0:
            return 1.0 / (r + t)
        return r - t

    def value(x):
        return _value_scalar(float(x[0]))

    def gradient(x):
        t = float(x[0])
        return np.array([-_value_scalar(t) / math.hypot(1.0, t)])

    return SmoothTerm(value=value, gradient=gradient, beta=1.0, name="unattained")


def make_zero() -> NonsmoothTerm:
    """g = 0; the proximal map is the identity."""
    return NonsmoothTerm(value=lambda x: 0.0, prox=lambda v, gamma: v.copy(), name="zero")


def make_l1(weight: float = 1.0) -> NonsmoothTerm:
    """g(x) = weight * ||x||_1 with the exact soft-threshold prox."""
    if not (math.isfinite(weight) and weight >= 0.0):
        raise ParameterError(f"l1: weight must be finite and >= 0, got {weight}")

    def value(x):
        return weight * float(np.sum(np.abs(x)))

    def prox(v, gamma):
        thr = gamma * weight
        return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)

    return NonsmoothTerm(value=value, prox=prox, name="l1")


def make_indicator_box(lower, upper) -> NonsmoothTerm:
    """Indicator of the box [lower, upper]; the prox is the exact clamp.

    Bounds may be scalars or vectors and are compared exactly: the clamp
    lands on the boundary bit for bit, so no tolerance is needed.
    """
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    hi = np.atleast_1d(np.asarray(upper, dtype=float))
    if np.any(lo > hi):
        raise ParameterError("box: lower bound exceeds upper bound")
    lo.flags.writeable = False
    hi.flags.writeable = False

    def value(x):
        if np.all(x >= lo) and np.all(x <= hi):
            return 0.0
        return math.inf

    def prox(v, gamma):
        return np.clip(v, lo, hi)

    return NonsmoothTerm(value=value, prox=prox, name="box")


def build_nonsmooth(spec: Optional[dict]) -> NonsmoothTerm:
    """Resolve the ``g`` field of a problem spec."""
    if spec is None:
        return make_zero()
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParameterError(f"nonsmooth spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "zero":
        return make_zero()
    if kind == "l1":
        return make_l1(float(spec.get("weight", 1.0)))
    if kind == "box":
        if "lo" not in spec or "hi" not in spec:
            raise ParameterError("box spec needs 'lo' and 'hi'")
        return make_indicator_box(spec["lo"], spec["hi"])
    raise ParameterError(f"unknown nonsmooth kind {kind!r}, expected one of {NONSMOOTH_NAMES}")


def _resolve_gamma(spec: dict, beta: float) -> float:
    gamma = spec.get("gamma")
    if gamma is None:
        return 1.0 / beta
    return float(gamma)


def _quadratic_problem(spec: dict) -> CompositeProblem:
    dim = int(spec.get("dim", 1))
    if "matrix" in spec:
        a = np.asarray(spec["matrix"], dtype=float)
        dim = a.shape[0]
    elif "diag" in spec:
        diag = np.asarray(spec["diag"], dtype=float)
        a = np.diag(diag)
        dim = diag.shape[0]
    else:
        a = np.eye(dim)
    b = np.asarray(spec.get("b", np.zeros(dim)), dtype=float)
    smooth = make_quadratic(a, b)
    g = build_nonsmooth(spec.get("g"))
    gamma = _resolve_gamma(spec, smooth.beta)

    known_min = None
    witness = None
    nonempty = None
    inf_h = None
    if g.name == "zero":
        sol, _, _, _ = np.linalg.lstsq(a, b, rcond=None)
        feasible = float(np.max(np.abs(a @ sol - b))) <= 1e-9 * max(1.0, float(np.max(np.abs(b))))
        if feasible:
            witness = sol
            known_min = smooth.value(sol)
            nonempty = True
        else:
            nonempty = False
            inf_h = -math.inf
    elif g.name == "box":
        nonempty = True
    return CompositeProblem(
        smooth=smooth,
        nonsmooth=g,
        gamma=gamma,
        dim=dim,
        name="quadratic",
        known_min=known_min,
        known_argmin=witness,
        argmin_nonempty=nonempty,
        inf_h=inf_h,
    )


def _lasso_problem(spec: dict) -> CompositeProblem:
    if "dim" not in spec:
        raise ParameterError("lasso spec needs 'dim'")
    if "seed" not in spec:
        raise ParameterError("lasso spec needs 'seed' (randomized design)")
    dim = int(spec["dim"])
    seed = int(spec["seed"])
    if dim < 1:
        raise ParameterError(f"lasso: dim must be >= 1, got {dim}")
    rows = int(spec.get("rows", LASSO_ROW_FACTOR * dim))
    lam_scale = float(spec.get("lam_scale", LASSO_LAM_SCALE))
    condition = float(spec.get("condition", LASSO_CONDITION))
    if rows < 1 or lam_scale <= 0.0 or condition < 1.0:
        raise ParameterError("lasso: rows >= 1, lam_scale > 0 and condition >= 1 required")

    rng = np.random.default_rng(seed)
    design = rng.normal(size=(rows, dim))
    if condition > 1.0:
        design = design * np.logspace(0.0, -math.log10(condition), dim)
    targets = rng.normal(size=rows)
    lam = lam_scale * float(np.max(np.abs(design.T @ targets)))
    smooth = make_least_squares(design, targets)
    g = make_l1(lam)
    gamma = _resolve_gamma(spec, smooth.beta)
    return CompositeProblem(
        smooth=smooth,
        nonsmooth=g,
        gamma=gamma,
        dim=dim,
        name=f"lasso-d{dim}-s{seed}",
        argmin_nonempty=True,
    )


def build_problem(spec: dict) -> CompositeProblem:
    """Build a catalog problem from its config-file spec."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise ParameterError(f"problem spec must be a dict with a 'name', got {spec!r}")
    name = spec["name"]
    if name == "quadratic":
        return _quadratic_problem(spec)
    if name == "lasso":
        return _lasso_problem(spec)
    if name == "affine-descent":
        smooth = make_affine_descent()
        return CompositeProblem(
            smooth=smooth,
            nonsmooth=build_nonsmooth(spec.get("g")),
            gamma=_resolve_gamma(spec, smooth.beta),
            dim=1,
            name="affine-descent",
            argmin_nonempty=False,
            inf_h=-math.inf,
        )
    if name == "unattained":
        smooth = make_unattained_infimum()
        return CompositeProblem(
            smooth=smooth,
            nonsmooth=build_nonsmooth(spec.get("g")),
            gamma=_resolve_gamma(spec, smooth.beta),
            dim=1,
            name="unattained",
            argmin_nonempty=False,
            inf_h=0.0,
        )
    raise ParameterError(f"unknown problem {name!r}, expected one of {PROBLEM_NAMES}")
