"""ISTA/FISTA/MFISTA iteration engines producing instrumented traces.

Every run records, per iteration: the objective, the energy sigma_n, step
and iterate norms, the one-step key-inequality residual, and (when an
anchor point is supplied) the Lyapunov energy E_n together with the
deviation-vector distance used by the quasi-Fejer ledger. Runs that
overflow are truncated and flagged diverging rather than raised, so the
no-minimizer regimes still produce usable partial traces.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .problem import CompositeProblem, as_point, evaluate_h, forward_backward_step
from .schedules import Schedule, canonical_schedule_spec, make_schedule

CSV_HEADER = "n,tau_n,alpha_n,h_xn,sigma_n,step_norm,x_norm,key_residual,lyapunov_E"

ALGORITHMS = ("ista", "fista", "mfista")

ISTA_SCHEDULE = {"kind": "constant", "tau": 1.0}


@dataclass
class SolverOptions:
    """Run-length, recording, stopping, and anchoring knobs.

    anchor is a point of dom h used for Lyapunov/Fejer ledgers (normally a
    known or oracle minimizer); anchor_h is its objective value, computed
    on demand when omitted. Stops are off by default because several
    checked properties concern non-convergent runs.
    """

    max_iters: int
    record_every: int = 1
    x0: Optional[np.ndarray] = None
    anchor: Optional[np.ndarray] = None
    anchor_h: Optional[float] = None
    stop_step_norm: Optional[float] = None
    stop_h_gap: Optional[float] = None
    divergence_threshold: float = 1e150


@dataclass
class SolverTrace:
    """Recorded iteration columns plus run metadata.

    Column arrays share one length; optional quantities hold NaN where
    undefined (key_residual while the previous iterate is outside dom h,
    lyapunov/fejer_dist when no anchor is set, fejer_dist for MFISTA whose
    ledger is defined through the candidate points instead).
    """

    algorithm: str
    problem_name: str
    schedule_spec: dict
    gamma: float
    max_iters: int
    record_every: int
    n: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    h: np.ndarray
    sigma: np.ndarray
    step_norm: np.ndarray
    x_norm: np.ndarray
    key_residual: np.ndarray
    lyapunov: np.ndarray
    fejer_dist: np.ndarray
    x0: np.ndarray
    x1: Optional[np.ndarray]
    h1: float
    final_x: Optional[np.ndarray]
    final_x_prev: Optional[np.ndarray]
    anchored: bool
    anchor: Optional[np.ndarray]
    anchor_h: Optional[float]
    diverging: bool = False
    truncated_at: Optional[int] = None
    stopped_at: Optional[int] = None

    @property
    def displacement(self) -> Optional[np.ndarray]:
        """x_N - x_{N-1} at the end of the run (last displacement probe)."""
        if self.final_x is None or self.final_x_prev is None:
            return None
        return self.final_x - self.final_x_prev


def _resolve_anchor(problem: CompositeProblem, options: SolverOptions):
    if options.anchor is None:
        return None, None
    anchor = as_point(options.anchor, problem.dim, "anchor")
    anchor_h = options.anchor_h
    if anchor_h is None:
        anchor_h = evaluate_h(problem, anchor)
    if not math.isfinite(anchor_h):
        raise ParameterError("anchor point lies outside dom h")
    return anchor, float(anchor_h)


def _run(problem: CompositeProblem, schedule: Schedule, options: SolverOptions, algorithm: str) -> SolverTrace:
    if options.max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {options.max_iters}")
    if options.record_every < 1:
        raise ParameterError(f"record_every must be >= 1, got {options.record_every}")
    if options.stop_h_gap is not None and problem.known_min is None:
        raise ParameterError("stop_h_gap requires a problem with known_min set")

    gamma = problem.gamma
    monotone = algorithm == "mfista"
    sched = schedule.clone()
    x0 = (
        np.zeros(problem.dim)
        if options.x0 is None
        else as_point(options.x0, problem.dim, "x0").astype(float)
    )
    anchor, anchor_h = _resolve_anchor(problem, options)
    anchored = anchor is not None

    n_iters = options.max_iters
    cap = 2 + n_iters // options.record_every
    col_n = np.zeros(cap, dtype=np.int64)
    cols = {
        name: np.full(cap, math.nan)
        for name in ("tau", "alpha", "h", "sigma", "step_norm", "x_norm", "key_residual", "lyapunov", "fejer_dist")
    }
    cursor = 0

    x_prev = x0
    h_prev = evaluate_h(problem, x0)
    y = x0.copy()
    tau = sched.next_tau()
    x1: Optional[np.ndarray] = None
    h1 = math.nan
    diverging = False
    truncated_at: Optional[int] = None
    stopped_at: Optional[int] = None
    final_x: Optional[np.ndarray] = None
    final_x_prev: Optional[np.ndarray] = None

    for n in range(1, n_iters + 1):
        t_y = forward_backward_step(problem, y)
        h_t = evaluate_h(problem, t_y)

        if math.isfinite(h_prev) and math.isfinite(h_t):
            disp = y - t_y
            key = (h_prev - h_t) - (float(disp @ (x_prev - y)) + 0.5 * float(disp @ disp)) / gamma
        else:
            key = math.nan

        if monotone:
            z = t_y
            if h_prev <= h_t:
                x, h_x = x_prev, h_prev
            else:
                x, h_x = z, h_t
            gap_vec = z - x_prev
        else:
            z = None
            x, h_x = t_y, h_t
            gap_vec = x - x_prev

        step = x - x_prev
        step_norm = float(np.linalg.norm(step))
        sigma = h_x + float(gap_vec @ gap_vec) / (2.0 * gamma)
        x_norm = float(np.linalg.norm(x))

        if x_norm > options.divergence_threshold or not (math.isfinite(h_x) and math.isfinite(x_norm)):
            diverging = True
            truncated_at = n
            break

        tau_next = sched.next_tau()
        alpha = (tau - 1.0) / tau_next

        if anchored:
            lead = z if monotone else x
            u = tau * lead - (tau - 1.0) * x_prev - anchor
            u_sq = float(u @ u)
            lyap = tau * tau * (h_x - anchor_h) + u_sq / (2.0 * gamma)
            fejer = math.nan if monotone else math.sqrt(u_sq)
        else:
            lyap = math.nan
            fejer = math.nan

        if n == 1:
            x1 = x.copy()
            h1 = h_x

        stop = False
        if options.stop_step_norm is not None and step_norm < options.stop_step_norm:
            stop = True
        if options.stop_h_gap is not None and h_x - problem.known_min < options.stop_h_gap:
            stop = True
        if stop:
            stopped_at = n

        if n == 1 or n == n_iters or n % options.record_every == 0 or stop:
            col_n[cursor] = n
            cols["tau"][cursor] = tau
            cols["alpha"][cursor] = alpha
            cols["h"][cursor] = h_x
            cols["sigma"][cursor] = sigma
            cols["step_norm"][cursor] = step_norm
            cols["x_norm"][cursor] = x_norm
            cols["key_residual"][cursor] = key
            cols["lyapunov"][cursor] = lyap
            cols["fejer_dist"][cursor] = fejer
            cursor += 1

        if monotone:
            y = x + (tau / tau_next) * (z - x) + alpha * (x - x_prev)
        else:
            y = x + alpha * step

        final_x_prev = x_prev
        final_x = x
        x_prev = x
        h_prev = h_x
        tau = tau_next
        if stop:
            break

    return SolverTrace(
        algorithm=algorithm,
        problem_name=problem.name,
        schedule_spec=sched.spec,
        gamma=gamma,
        max_iters=n_iters,
        record_every=options.record_every,
        n=col_n[:cursor].copy(),
        tau=cols["tau"][:cursor].copy(),
        alpha=cols["alpha"][:cursor].copy(),
        h=cols["h"][:cursor].copy(),
        sigma=cols["sigma"][:cursor].copy(),
        step_norm=cols["step_norm"][:cursor].copy(),
        x_norm=cols["x_norm"][:cursor].copy(),
        key_residual=cols["key_residual"][:cursor].copy(),
        lyapunov=cols["lyapunov"][:cursor].copy(),
        fejer_dist=cols["fejer_dist"][:cursor].copy(),
        x0=x0,
        x1=x1,
        h1=h1,
        final_x=final_x,
        final_x_prev=final_x_prev,
        anchored=anchored,
        anchor=anchor,
        anchor_h=anchor_h,
        diverging=diverging,
        truncated_at=truncated_at,
        stopped_at=stopped_at,
    )


def fista_run(problem: CompositeProblem, schedule, options: SolverOptions) -> SolverTrace:
    """x_n = T y_n with extrapolation y_{n+1} = x_n + alpha_n (x_n - x_{n-1})."""
    sched = schedule if isinstance(schedule, Schedule) else make_schedule(schedule)
    return _run(problem, sched, options, "fista")


def mfista_run(problem: CompositeProblem, schedule, options: SolverOptions) -> SolverTrace:
    """Monotone variant: candidate z_n = T y_n is accepted only if it lowers h.

    Ties keep the previous iterate. The extrapolation uses both the
    candidate and the accepted point:
    y_{n+1} = x_n + (tau_n/tau_{n+1})(z_n - x_n) + alpha_n (x_n - x_{n-1}).
    """
    sched = schedule if isinstance(schedule, Schedule) else make_schedule(schedule)
    return _run(problem, sched, options, "mfista")


def ista_run(problem: CompositeProblem, options: SolverOptions, schedule=None) -> SolverTrace:
    """Unaccelerated proximal gradient: x_n = T x_{n-1}.

    Realized as the momentum iteration with the constant schedule tau = 1,
    which makes every alpha_n vanish. A non-unit schedule is rejected.
    """
    if schedule is not None:
        spec = schedule.spec if isinstance(schedule, Schedule) else canonical_schedule_spec(schedule)
        if spec != ISTA_SCHEDULE:
            raise ParameterError(f"ista requires the constant schedule tau=1, got {spec}")
    return _run(problem, make_schedule(ISTA_SCHEDULE), options, "ista")


def run_algorithm(problem: CompositeProblem, algorithm: str, schedule_spec: Optional[dict], options: SolverOptions) -> SolverTrace:
    """Dispatch on the algorithm name used by config files."""
    if algorithm == "ista":
        return ista_run(problem, options, schedule=schedule_spec)
    if algorithm == "fista":
        return fista_run(problem, schedule_spec or {"kind": "classical"}, options)
    if algorithm == "mfista":
        return mfista_run(problem, schedule_spec or {"kind": "classical"}, options)
    raise ParameterError(f"unknown algorithm {algorithm!r}, expected one of {ALGORITHMS}")


def _format_cell(v: float) -> str:
    if math.isnan(v):
        return ""
    return repr(float(v))


def write_trace_csv(trace: SolverTrace, path) -> None:
    """Serialize the recorded columns; floats use shortest round-trip form."""
    rows = [CSV_HEADER]
    for i in range(trace.n.size):
        rows.append(
            ",".join(
                (
                    str(int(trace.n[i])),
                    repr(float(trace.tau[i])),
                    repr(float(trace.alpha[i])),
                    repr(float(trace.h[i])),
                    repr(float(trace.sigma[i])),
                    repr(float(trace.step_norm[i])),
                    repr(float(trace.x_norm[i])),
                    _format_cell(float(trace.key_residual[i])),
                    _format_cell(float(trace.lyapunov[i])),
                )
            )
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows))
        fh.write("\n")


def read_trace_csv(path) -> dict:
    """Load a trace CSV into column arrays; empty cells become NaN."""
    with open(path, "r") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ParameterError(f"{path}: unexpected trace header {header!r}")
        raw = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    names = CSV_HEADER.split(",")
    if not raw:
        return {name: np.array([]) for name in names}
    arr = np.array(
        [[cell if cell else "nan" for cell in row] for row in raw],
        dtype=object,
    )
    out = {"n": arr[:, 0].astype(np.int64)}
    for j, name in enumerate(names[1:], start=1):
        out[name] = arr[:, j].astype(float)
    return out
