"""Independent numeric oracles shared by the test modules.

Everything here is deliberately dumb and slow: grid search plus golden
section for 1D prox problems, dense eigensolves for curvature. The
package must agree with these, not the other way around.
"""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fun, lo: float, hi: float, iters: int = 200) -> float:
    """Minimize a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def prox_oracle_1d(g_scalar, y: float, gamma: float, span: float = 50.0) -> float:
    """argmin_u g(u) + (u - y)^2 / (2 gamma) by grid + golden section.

    g_scalar maps a float to a float (may return inf outside its domain).
    """

    def objective(u: float) -> float:
        return g_scalar(u) + (u - y) ** 2 / (2.0 * gamma)

    grid = np.linspace(y - span, y + span, 20001)
    vals = np.array([objective(float(u)) for u in grid])
    k = int(np.argmin(vals))
    lo = float(grid[max(0, k - 1)])
    hi = float(grid[min(len(grid) - 1, k + 1)])
    return golden_section(objective, lo, hi)


def beta_oracle(matrix: np.ndarray) -> float:
    """Largest absolute eigenvalue of a symmetric matrix (dense solve)."""
    return float(np.max(np.abs(np.linalg.eigvalsh(matrix))))


def classical_taus(count: int, tau1: float = 1.0) -> np.ndarray:
    """The textbook momentum recursion, written out independently."""
    out = np.empty(count)
    t = tau1
    for i in range(count):
        out[i] = t
        t = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
    return out
