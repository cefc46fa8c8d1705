"""Composite objectives h = f + g and the forward-backward step.

A problem bundles a smooth convex term f (finite everywhere, with a
Lipschitz gradient) and a nonsmooth convex term g reached only through its
proximal map. The step size gamma must lie in (0, 1/beta], where beta is
the declared gradient-Lipschitz constant of f; the right endpoint is
allowed.

g may evaluate to +inf outside its domain. That value is represented by
the IEEE infinity and treated as an explicit extended real: it is returned
and compared, never fed into subtractions or products. Code that needs a
finite h checks first and raises :class:`~apglab.errors.OutsideDomain`.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import OutsideDomain, ParameterError

# Tolerance for exact operator identities (fixed-point residuals and the
# one-sided inequality ledgers). Violations beyond this are treated as real.
NUMERIC_TOL = 1e-10

# Relative slack so that gamma = 1/beta survives the float division.
_GAMMA_SLACK = 1e-12

Vector = np.ndarray


@dataclass(frozen=True)
class SmoothTerm:
    """Differentiable convex term with a declared gradient-Lipschitz constant."""

    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    beta: float
    name: str = "smooth"

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ParameterError(
                f"smooth term {self.name!r}: beta must be finite and positive, got {self.beta}"
            )


@dataclass(frozen=True)
class NonsmoothTerm:
    """Convex lower-semicontinuous term reached through its proximal map.

    ``value`` may return +inf outside the domain. ``prox`` receives the
    point and the step size and must return the exact minimizer of
    g(u) + ||u - v||^2 / (2 gamma); built-in terms satisfy this in closed
    form. A user-supplied iterative prox that fails to converge should
    raise :class:`~apglab.errors.ProxFailure` with its inner residual.
    """

    value: Callable[[Vector], float]
    prox: Callable[[Vector, float], Vector]
    name: str = "nonsmooth"


@dataclass(frozen=True)
class CompositeProblem:
    """Minimization target h = f + g with a fixed forward-backward step size.

    Optional metadata records what is provably known about the instance:
    ``known_min`` and ``known_argmin`` when a minimizer is available in
    closed form, ``argmin_nonempty`` as a three-valued flag (True, False,
    or None for unknown), and ``inf_h`` for problems whose infimum is known
    but not attained (it may be ``-math.inf``).

    Instances are frozen and safe to share across worker processes.
    """

    smooth: SmoothTerm
    nonsmooth: NonsmoothTerm
    gamma: float
    dim: int
    name: str = "problem"
    known_min: Optional[float] = None
    known_argmin: Optional[Vector] = field(default=None, repr=False)
    argmin_nonempty: Optional[bool] = None
    inf_h: Optional[float] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"problem {self.name!r}: dim must be >= 1, got {self.dim}")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ParameterError(
                f"problem {self.name!r}: gamma must be finite and positive, got {self.gamma}"
            )
        if self.gamma * self.smooth.beta > 1.0 + _GAMMA_SLACK:
            raise ParameterError(
                f"problem {self.name!r}: gamma = {self.gamma} exceeds 1/beta = "
                f"{1.0 / self.smooth.beta}"
            )
        if self.known_argmin is not None:
            w = np.asarray(self.known_argmin, dtype=float)
            if w.shape != (self.dim,):
                raise ParameterError(
                    f"problem {self.name!r}: witness shape {w.shape} does not match dim {self.dim}"
                )
            w = w.copy()
            w.flags.writeable = False
            object.__setattr__(self, "known_argmin", w)


def as_point(x, dim: int, what: str = "point") -> Vector:
    """Coerce ``x`` to a float vector of length ``dim`` or raise."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.shape != (dim,):
        raise ParameterError(f"{what}: expected shape ({dim},), got {v.shape}")
    return v


def evaluate_h(problem: CompositeProblem, x: Vector) -> float:
    """Evaluate h(x) = f(x) + g(x), returning +inf when x is outside dom g."""
    x = as_point(x, problem.dim)
    gval = float(problem.nonsmooth.value(x))
    if math.isinf(gval) and gval > 0.0:
        return math.inf
    return float(problem.smooth.value(x)) + gval


def forward_backward_step(problem: CompositeProblem, y: Vector) -> Vector:
    """Apply T(y) = prox_{gamma g}(y - gamma * grad f(y))."""
    y = as_point(y, problem.dim)
    step = y - problem.gamma * problem.smooth.gradient(y)
    out = problem.nonsmooth.prox(step, problem.gamma)
    return as_point(out, problem.dim, what=f"prox of {problem.nonsmooth.name!r}")


def key_inequality_residual(problem: CompositeProblem, x: Vector, y: Vector) -> float:
    """Residual of the one-step descent inequality at the pair (x, y).

    For T the forward-backward operator the inequality

        <y - Ty, x - y> / gamma + ||y - Ty||^2 / (2 gamma) <= h(x) - h(Ty)

    holds for every x in dom h and every y. The returned residual is the
    right side minus the left side, so exact arithmetic gives a value
    >= 0; anything below ``-NUMERIC_TOL`` indicates a broken operator.

    Raises :class:`OutsideDomain` when h(x) = +inf, since the comparison
    is empty there.
    """
    x = as_point(x, problem.dim)
    y = as_point(y, problem.dim)
    hx = evaluate_h(problem, x)
    if not math.isfinite(hx):
        raise OutsideDomain("reference point outside dom h")
    ty = forward_backward_step(problem, y)
    hty = evaluate_h(problem, ty)
    displacement = y - ty
    lhs = (float(displacement @ (x - y)) + 0.5 * float(displacement @ displacement)) / problem.gamma
    return (hx - hty) - lhs


def fixed_point_residual(problem: CompositeProblem, x: Vector) -> float:
    """Distance ||T(x) - x||, zero exactly at minimizers of h."""
    x = as_point(x, problem.dim)
    return float(np.linalg.norm(forward_backward_step(problem, x) - x))
