"""Cutting-plane baseline for maximizing the envelope over a polyhedron.

A level-function method working directly in x-space.  Each iteration
solves the disjunctive envelope program at the current iterate x_i,
whose optimal slope xi_i defines the cut sigma_i(x) = <xi_i, x - x_i>:
any x with psi(x) > psi(x_i) satisfies sigma_i(x) > 0, so the running
lower envelope of cuts bounds how much room is left.  The next iterate
maximizes min over recorded cuts, and the method stops when that
optimum Delta drops to the tolerance.

Returned is the last iterate whose envelope value was actually
computed, together with its independently re-evaluated psi.  When the
iteration budget runs out instead, the best iterate seen so far is
returned and `converged` is False.  Every iteration costs one
mixed-binary solve, so the iteration count is also the MILP count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelope import _disjunctive_solve, eval_psi
from .lp import LinearProgram, LpStatus, solve_lp
from .sample import SortedSample
from .solver import Polyhedron

__all__ = ["LevelFunctionResult", "solve_level_function"]

_INF = float("inf")


@dataclass
class LevelFunctionResult:
    x: np.ndarray
    value: float
    iterations: int
    milp_solves: int
    converged: bool
    delta: float
    deltas: list[float]


def _argmax_cuts(cuts, domain: Polyhedron):
    """max over the domain of min_l <xi_l, x - x_l>; one LP."""
    T = domain.dim
    n = T + 1
    rows = []
    rhs = []
    for xi, xl in cuts:
        r = np.zeros(n)
        r[T] = 1.0
        r[:T] = -xi
        rows.append(r)
        rhs.append(-float(xi @ xl))
    for a, bb in zip(domain.A, domain.b):
        r = np.zeros(n)
        r[:T] = a
        rows.append(r)
        rhs.append(bb)
    lo = np.concatenate([domain.lo, [-_INF]])
    hi = np.concatenate([domain.hi, [_INF]])
    c = np.zeros(n)
    c[T] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=np.array(rows), b=np.array(rhs),
                                 lo=lo, hi=hi, sense="max"))
    if sol.status is not LpStatus.OPTIMAL:  # domain is compact
        raise RuntimeError(f"cut LP ended {sol.status.value}")
    return sol.x[:T].copy(), sol.value


def solve_level_function(s: SortedSample, domain: Polyhedron,
                         eps: float = 1e-6,
                         max_iter: int = 500) -> LevelFunctionResult:
    """Maximize psi over the domain by accumulated slope cuts.

    Starts from the Chebyshev center.  With eps = inf the loop stops
    after the first cut and returns the starting point.
    """
    x = domain.chebyshev_center()
    cuts: list[tuple[np.ndarray, np.ndarray]] = []
    deltas: list[float] = []
    best_x = x
    best_val = -_INF
    milps = 0
    for it in range(max_iter):
        val, xi, _ = _disjunctive_solve(s, x)
        milps += 1
        if val > best_val:
            best_val, best_x = val, x
        cuts.append((xi, x))
        x_next, delta = _argmax_cuts(cuts, domain)
        deltas.append(delta)
        if delta <= eps:
            return LevelFunctionResult(
                x=x, value=eval_psi(s, x).value, iterations=milps,
                milp_solves=milps, converged=True, delta=delta, deltas=deltas)
        x = x_next
    return LevelFunctionResult(
        x=best_x, value=eval_psi(s, best_x).value, iterations=milps,
        milp_solves=milps, converged=False,
        delta=deltas[-1] if deltas else _INF, deltas=deltas)
