"""Momentum parameter schedules and their admissibility diagnostics.

A schedule generates the sequence tau_1, tau_2, ... driving the
extrapolation coefficient alpha_n = (tau_n - 1) / tau_{n+1}. Admissible
sequences start at tau_1 >= 1 and obey the bracket

    tau_n <= tau_{n+1} <= (1 + sqrt(1 + 4 tau_n^2)) / 2,

which in turn forces tau_{n+1}^2 - tau_{n+1} <= tau_n^2 and caps any
single-step increase at (1 + sqrt(5))/4. Built-in families satisfy the
bracket by construction; user-supplied lists are validated eagerly so a
bad sequence fails at load time, not after a long run.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import AdmissibilityError, ParameterError

SCHEDULE_KINDS = (
    "constant",
    "classical",
    "chambolle_dossal",
    "aujol_dossal",
    "attouch_shifted",
    "custom",
)

# Largest admissible single-step increase tau_{n+1} - tau_n.
MAX_STEP_INCREASE = (1.0 + math.sqrt(5.0)) / 4.0

# Default tolerance for admissibility residuals. Residuals are measured
# relative to max(1, scale of the compared quantity): at tau ~ 5e4 the
# squared-form comparison lives near 2.5e9 where one ulp is ~4e-7, so an
# absolute budget would be meaningless while a relative one stays at a
# comfortable ~1e3 ulp margin.
ADMISSIBILITY_TOL = 1e-12


def bracket_upper(tau):
    """Largest admissible successor of tau (scalar or array)."""
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tau * tau))


def canonical_schedule_spec(spec: dict) -> dict:
    """Validate a schedule spec and return it in canonical form.

    Raises ParameterError for malformed or out-of-gate parameters and
    AdmissibilityError when a custom list violates the bracket.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParameterError(f"schedule spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind == "constant":
        tau = float(spec.get("tau", 1.0))
        if not (math.isfinite(tau) and tau >= 1.0):
            raise ParameterError(f"constant schedule needs tau >= 1, got {tau}")
        return {"kind": kind, "tau": tau}
    if kind == "classical":
        tau1 = float(spec.get("tau1", 1.0))
        if not (math.isfinite(tau1) and tau1 >= 1.0):
            raise ParameterError(f"classical schedule needs tau1 >= 1, got {tau1}")
        return {"kind": kind, "tau1": tau1}
    if kind == "chambolle_dossal":
        if "rho" not in spec:
            raise ParameterError("chambolle_dossal schedule needs 'rho'")
        rho = float(spec["rho"])
        if not (math.isfinite(rho) and rho >= 2.0):
            raise ParameterError(f"chambolle_dossal needs rho >= 2, got {rho}")
        return {"kind": kind, "rho": rho}
    if kind == "aujol_dossal":
        if "a" not in spec or "d" not in spec:
            raise ParameterError("aujol_dossal schedule needs 'a' and 'd'")
        a = float(spec["a"])
        d = float(spec["d"])
        if not (math.isfinite(a) and math.isfinite(d)):
            raise ParameterError("aujol_dossal parameters must be finite")
        if d == 0.0:
            if a <= 0.0:
                raise ParameterError(f"aujol_dossal with d=0 needs a > 0, got a={a}")
        elif 0.0 < d <= 1.0:
            gate = max(1.0, (2.0 * d) ** (1.0 / d))
            if a <= gate:
                raise ParameterError(
                    f"aujol_dossal needs a > max(1, (2d)^(1/d)) = {gate:g} when d={d:g}, got a={a:g}"
                )
        else:
            raise ParameterError(f"aujol_dossal needs d in [0, 1], got {d}")
        return {"kind": kind, "a": a, "d": d}
    if kind == "attouch_shifted":
        if "rho" not in spec:
            raise ParameterError("attouch_shifted schedule needs 'rho'")
        rho = float(spec["rho"])
        if not (math.isfinite(rho) and rho > 1.0):
            raise ParameterError(f"attouch_shifted needs rho > 1, got {rho}")
        return {"kind": kind, "rho": rho}
    if kind == "custom":
        raw = spec.get("values")
        if not raw:
            raise ParameterError("custom schedule needs a nonempty 'values' list")
        values = [float(v) for v in raw]
        if not all(math.isfinite(v) for v in values):
            raise ParameterError("custom schedule values must be finite")
        report = check_admissibility(np.asarray(values))
        if not report.ok:
            raise AdmissibilityError(
                f"custom schedule inadmissible at index {report.first_violation}: {report.reason}",
                index=report.first_violation,
            )
        return {"kind": kind, "values": values}
    raise ParameterError(f"unknown schedule kind {kind!r}, expected one of {SCHEDULE_KINDS}")


class Schedule:
    """Single-owner iterator over an admissible momentum sequence.

    The first next_tau() call returns tau_1; each further call advances by
    one element. Clones restart from the beginning and are independent, so
    a schedule can be handed to several runs without shared state.
    """

    def __init__(self, spec: dict):
        self.spec = canonical_schedule_spec(spec)
        self.kind = self.spec["kind"]
        self._n = 0
        self._tau = math.nan
        self._base = math.nan

    def clone(self) -> "Schedule":
        return Schedule(self.spec)

    @property
    def n(self) -> int:
        return self._n

    @property
    def tau(self) -> float:
        return self._tau

    def next_tau(self) -> float:
        spec = self.spec
        n = self._n + 1
        kind = self.kind
        if kind == "constant":
            tau = spec["tau"]
        elif kind == "classical":
            tau = spec["tau1"] if n == 1 else float(bracket_upper(self._tau))
        elif kind == "chambolle_dossal":
            tau = (n + spec["rho"] - 1.0) / spec["rho"]
        elif kind == "aujol_dossal":
            tau = ((n + spec["a"] - 1.0) / spec["a"]) ** spec["d"]
        elif kind == "attouch_shifted":
            self._base = 1.0 if n == 1 else float(bracket_upper(self._base))
            tau = (self._base + spec["rho"] - 1.0) / spec["rho"]
        else:
            values = spec["values"]
            if n > len(values):
                raise ParameterError(f"custom schedule exhausted after {len(values)} values")
            tau = values[n - 1]
        self._n = n
        self._tau = float(tau)
        return self._tau


def make_schedule(spec: dict) -> Schedule:
    return Schedule(spec)


def prefix(spec: Union[dict, Schedule], count: int) -> np.ndarray:
    """First `count` values tau_1..tau_count of a schedule.

    Always iterates a fresh Schedule so the values are bit-identical to
    what a solver run consumes.
    """
    if count < 1:
        raise ParameterError(f"prefix length must be >= 1, got {count}")
    sched = spec.clone() if isinstance(spec, Schedule) else make_schedule(spec)
    if sched.kind == "custom" and len(sched.spec["values"]) < count:
        raise ParameterError(
            f"custom schedule has {len(sched.spec['values'])} values, {count} requested"
        )
    out = np.empty(count)
    for i in range(count):
        out[i] = sched.next_tau()
    return out


def alphas(taus: np.ndarray) -> np.ndarray:
    """Extrapolation coefficients alpha_n = (tau_n - 1)/tau_{n+1}.

    One element shorter than the input prefix.
    """
    taus = np.asarray(taus, dtype=float)
    return (taus[:-1] - 1.0) / taus[1:]


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of checking a tau prefix against the bracket.

    Residuals are positive-when-violated and scale-relative (see
    ADMISSIBILITY_TOL). first_violation is the 0-based index of the
    offending element, or None.
    """

    ok: bool
    first_violation: Optional[int]
    reason: str
    tau1_deficit: float
    worst_lower: float
    worst_upper: float
    worst_square: float
    worst_increment: float


def check_admissibility(taus: np.ndarray, tol: float = ADMISSIBILITY_TOL) -> AdmissibilityReport:
    """Verify tau_1 >= 1 and the bracket for every consecutive pair.

    Also measures the two derived inequalities (squared form, increment
    cap) so callers can assert them with the same tolerance.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size < 1:
        raise ParameterError("admissibility check needs a nonempty 1D prefix")
    if not np.all(np.isfinite(taus)):
        bad = int(np.flatnonzero(~np.isfinite(taus))[0])
        return AdmissibilityReport(
            ok=False,
            first_violation=bad,
            reason=f"tau_{bad + 1} is not finite",
            tau1_deficit=math.inf,
            worst_lower=math.inf,
            worst_upper=math.inf,
            worst_square=math.inf,
            worst_increment=math.inf,
        )

    tau1_deficit = 1.0 - float(taus[0])
    if taus.size == 1:
        ok = tau1_deficit <= tol
        return AdmissibilityReport(
            ok=ok,
            first_violation=None if ok else 0,
            reason="" if ok else f"tau_1 = {float(taus[0])!r} < 1",
            tau1_deficit=tau1_deficit,
            worst_lower=-math.inf,
            worst_upper=-math.inf,
            worst_square=-math.inf,
            worst_increment=-math.inf,
        )

    t0 = taus[:-1]
    t1 = taus[1:]
    diff = t1 - t0
    lower = (t0 - t1) / np.maximum(1.0, t0)
    upper = (t1 - bracket_upper(t0)) / np.maximum(1.0, t1)
    square = (diff * (t1 + t0) - t1) / np.maximum(1.0, t1 * t1)
    increment = diff - MAX_STEP_INCREASE

    first: Optional[int] = None
    reason = ""
    if tau1_deficit > tol:
        first = 0
        reason = f"tau_1 = {float(taus[0])!r} < 1"
    else:
        bad = np.flatnonzero((lower > tol) | (upper > tol))
        if bad.size:
            k = int(bad[0])
            first = k + 1
            if lower[k] > tol:
                reason = f"tau_{k + 2} = {float(t1[k])!r} < tau_{k + 1} = {float(t0[k])!r}"
            else:
                reason = (
                    f"tau_{k + 2} = {float(t1[k])!r} exceeds the bracket bound "
                    f"{float(bracket_upper(t0[k]))!r}"
                )

    return AdmissibilityReport(
        ok=first is None,
        first_violation=first,
        reason=reason,
        tau1_deficit=tau1_deficit,
        worst_lower=float(np.max(lower)),
        worst_upper=float(np.max(upper)),
        worst_square=float(np.max(square)),
        worst_increment=float(np.max(increment)),
    )


def classical_lower_bound_check(n_max: int, tau1: float = 1.0) -> dict:
    """Classical-schedule growth facts up to n_max.

    Returns min slack of tau_n - (n+1)/2, the prefix sup of n/tau_n, and
    the drift of tau_n/n from its limit 1/2 at the last index.
    """
    if n_max < 1:
        raise ParameterError(f"n_max must be >= 1, got {n_max}")
    taus = prefix({"kind": "classical", "tau1": tau1}, n_max)
    n = np.arange(1, n_max + 1, dtype=float)
    min_slack = float(np.min(taus - (n + 1.0) / 2.0))
    sup_n_over_tau = float(np.max(n / taus))
    ratio_drift = abs(taus[-1] / n_max - 0.5)
    return {
        "ok": min_slack >= 0.0 and sup_n_over_tau <= 2.0,
        "min_slack": min_slack,
        "sup_n_over_tau": sup_n_over_tau,
        "ratio_drift": float(ratio_drift),
    }


def folklore_expansion_check(n_max: int) -> np.ndarray:
    """Residuals r_n = n(alpha_n - 1 + 3/n) for the classical schedule.

    The expansion alpha_n = 1 - 3/n + o(1/n) predicts r_n -> 0; callers
    compare |r| at the end of the prefix against early values.
    """
    if n_max < 1:
        raise ParameterError(f"n_max must be >= 1, got {n_max}")
    taus = prefix({"kind": "classical"}, n_max + 1)
    a = alphas(taus)
    n = np.arange(1, n_max + 1, dtype=float)
    return n * (a - 1.0) + 3.0


def attouch_condition_delta(taus: np.ndarray) -> float:
    """Smallest delta with tau_{k+1}^2 - tau_k^2 <= delta * tau_{k+1}.

    Computed in the factored form (t1 - t0)(t1 + t0)/t1, which keeps the
    quotient accurate when the squares grow large.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size < 2:
        return 0.0
    t0 = taus[:-1]
    t1 = taus[1:]
    return float(np.max((t1 - t0) * (t1 + t0) / t1))


def blowsup_partial_sums(taus: np.ndarray) -> float:
    """Partial sum of 1 - tau_k^2 / tau_{k+1}^2 over the prefix."""
    taus = np.asarray(taus, dtype=float)
    if taus.size < 2:
        return 0.0
    t0 = taus[:-1]
    t1 = taus[1:]
    return float(np.sum(1.0 - (t0 * t0) / (t1 * t1)))


def kappa_bound(spec: dict) -> float:
    """Analytic bound on kappa = sup_n n/tau_n, +inf when unbounded.

    Prefix suprema understate kappa, so certificates use these closed
    forms: 2 for classical (any tau1 >= 1), rho for chambolle_dossal,
    2*rho for attouch_shifted, a for aujol_dossal at d=1.
    """
    spec = canonical_schedule_spec(spec)
    kind = spec["kind"]
    if kind == "classical":
        return 2.0
    if kind == "chambolle_dossal":
        return spec["rho"]
    if kind == "attouch_shifted":
        return 2.0 * spec["rho"]
    if kind == "aujol_dossal" and spec["d"] == 1.0:
        return spec["a"]
    return math.inf


def tau_sup_bound(spec: dict) -> float:
    """sup_n tau_n: finite for the bounded kinds, +inf otherwise."""
    spec = canonical_schedule_spec(spec)
    kind = spec["kind"]
    if kind == "constant":
        return spec["tau"]
    if kind == "custom":
        return max(spec["values"])
    if kind == "aujol_dossal" and spec["d"] == 0.0:
        return 1.0
    return math.inf


def quotient_window(tau_sup: float) -> tuple:
    """Asymptotic window for alpha_n when sup tau_n = tau_sup is finite.

    liminf alpha_n is at least (1 - 1/t)/(1 + 1/t) - 1/(t(t+1)) and
    limsup alpha_n is at most 1 - 1/t.
    """
    t = float(tau_sup)
    if not math.isfinite(t) or t < 1.0:
        raise ParameterError(f"quotient window needs finite tau_sup >= 1, got {tau_sup}")
    lo = (1.0 - 1.0 / t) / (1.0 + 1.0 / t) - 1.0 / (t * (t + 1.0))
    hi = 1.0 - 1.0 / t
    return (lo, hi)
