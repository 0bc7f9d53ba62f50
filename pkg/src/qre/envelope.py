"""Pointwise evaluation of the worst-case quasiconcave envelope.

psi(x) is the smallest value at x among all L-Lipschitz (sup norm),
optionally monotone, quasiconcave functions that majorize the sample.
Its restriction to a level prefix D_j is bounded by the slope program

    P_LP(x; D_j):  min ups  s.t.  ups + <xi, theta - x> >= vhat(theta)
                   for theta in D_j,  ||xi||_1 <= L  (xi >= 0 if monotone),

and psi(x) equals min{vhat(theta_j), val P_LP(x; D_j)} at the level
index j that the clamped binary search below settles on.  The exact
disjunctive program (the slope term enters through max{., 0}) is solved
separately as a mixed-binary program and serves as the reference route.

Implementation note: the binary search evaluates val P_LP through its
LP dual, whose basis has N+1 rows (2N+1 without monotonicity) no matter
how large j grows; the slope certificate falls out as the dual
multipliers of the coordinate rows.  solve_plp keeps the direct primal
formulation, with the non-monotone slope split xi = xi+ - xi-, and the
two routes are required to agree in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BigMTooSmall, InternalError
from .lp import (LinearProgram, LpStatus, MixedBinaryProgram, SimplexOptions,
                 solve_lp, solve_milp)
from .sample import SortedSample

__all__ = [
    "KinkedMajorant",
    "EnvelopeValue",
    "solve_plp",
    "eval_psi",
    "eval_psi_milp",
    "default_bigm",
    "level_search",
]

_INF = float("inf")


@dataclass
class KinkedMajorant:
    """h(y) = value + max{<slope, y - anchor>, 0}, the one-kink certificate."""

    anchor: np.ndarray
    value: float
    slope: np.ndarray

    def __call__(self, y: np.ndarray) -> float:
        return self.value + max(float(self.slope @ (np.asarray(y) - self.anchor)), 0.0)


@dataclass
class EnvelopeValue:
    """psi(x) together with the level index, certificate, and LP count."""

    value: float
    level: int
    witness: KinkedMajorant
    lp_solves: int


def level_search(values: np.ndarray, probe):
    """Binary search over level indices shared by every evaluator/solver.

    `probe(j)` returns the level-j subproblem value.  Tied values share
    a level, so the search runs over the last index of each distinct
    value block; the answer's block d* is characterized exactly by
    probe(block_end(d)) <= next distinct value iff d* > d.  Probing
    inside a tie block would be meaningless: its subproblem mixes a
    partial constraint set with an unchanged clamp value.  Probes are
    memoized, so the number of subproblems solved is at most
    ceil(log2 J) + 1.

    Returns (final j, probe(final j), trace, prev_end) where trace
    lists each fresh solve as (j, value) and prev_end is the end of
    the preceding block (0 for the first block).  When the caller
    clamps the value down to vhat(theta_j), the slope certifying the
    clamp comes from the prev_end probe, already solved and cached:
    its test passed, so its value is at most the clamp.
    """
    values = np.asarray(values, dtype=float)
    # last index (1-based) of each run of equal values, descending order
    ends = np.flatnonzero(np.diff(values) != 0.0) + 1
    ends = np.concatenate([ends, [len(values)]])
    cache: dict[int, float] = {}
    trace: list[tuple[int, float]] = []

    def get(j: int) -> float:
        if j not in cache:
            v = float(probe(j))
            cache[j] = v
            trace.append((j, v))
        return cache[j]

    lo, hi = 0, len(ends) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        j = int(ends[mid])
        if get(j) <= float(values[j]):
            lo = mid + 1
        else:
            hi = mid
    j = int(ends[lo])
    prev = int(ends[lo - 1]) if lo > 0 else 0
    return j, get(j), trace, prev


def _plp_dual(s: SortedSample, x: np.ndarray, j: int) -> tuple[float, np.ndarray]:
    """val P_LP(x; D_j) and an optimal slope, via the dual program.

    Monotone:      max vhat.p - L q  s.t.  sum p_i theta_i - q 1 <= x,
                   p in simplex, q >= 0; the slope is the vector of row duals.
    Non-monotone:  the coordinate rows appear with both signs and the
                   slope is the difference of the two dual blocks.
    """
    pts, vals = s.points[:j], s.values[:j]
    N = s.dim
    c = np.concatenate([vals, [-s.lipschitz]])
    E = np.concatenate([np.ones(j), [0.0]])[None, :]
    if s.monotone:
        A = np.hstack([pts.T, -np.ones((N, 1))])
        b = x.astype(float)
    else:
        A = np.vstack([np.hstack([pts.T, -np.ones((N, 1))]),
                       np.hstack([-pts.T, -np.ones((N, 1))])])
        b = np.concatenate([x, -x])
    lp = LinearProgram(c=c, A=A, b=b, E=E, d=[1.0],
                       lo=np.zeros(j + 1), hi=None, sense="max")
    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:  # simplex over a compact set
        raise InternalError(f"level LP ended {sol.status.value}")
    xi = sol.dual_ineq if s.monotone else sol.dual_ineq[:N] - sol.dual_ineq[N:]
    return sol.value, xi


def solve_plp(s: SortedSample, x: np.ndarray, j: int) -> tuple[float, np.ndarray]:
    """val P_LP(x; D_j) and an optimal slope, from the primal formulation.

    The level variable is shifted by max vhat so the slack basis is
    feasible immediately (no phase-1 work).  Without monotonicity the
    slope is modeled split as xi = xi+ - xi- with sum(xi+ + xi-) <= L.
    """
    x = np.asarray(x, dtype=float)
    pts, vals = s.points[:j], s.values[:j]
    N = s.dim
    L = s.lipschitz
    shift = float(vals[0])
    D = pts - x
    nxi = N if s.monotone else 2 * N
    # vars: [ups, xi...]; rows: majorant per point, then the norm budget
    A = np.zeros((j + 1, 1 + nxi))
    A[:j, 0] = -1.0
    A[:j, 1:1 + N] = -D
    if not s.monotone:
        A[:j, 1 + N:] = D
    A[j, 1:] = 1.0
    b = np.concatenate([shift - vals, [L]])
    lo = np.zeros(1 + nxi)
    lo[0] = -_INF
    c = np.zeros(1 + nxi)
    c[0] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=A, b=b, lo=lo, hi=None))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"slope program ended {sol.status.value}")
    xi = sol.x[1:1 + N] if s.monotone else sol.x[1:1 + N] - sol.x[1 + N:]
    return sol.value + shift, xi


def eval_psi(s: SortedSample, x: np.ndarray) -> EnvelopeValue:
    """Evaluate the envelope at x by clamped binary search over levels."""
    x = np.asarray(x, dtype=float)
    if x.shape != (s.dim,):
        raise InternalError(f"point has shape {x.shape}, expected ({s.dim},)")
    slopes: dict[int, np.ndarray] = {}

    def probe(j: int) -> float:
        v, xi = _plp_dual(s, x, j)
        slopes[j] = xi
        return v

    j, raw, trace, prev = level_search(s.values, probe)
    clamp = float(s.values[j - 1])
    if raw <= clamp:
        value, slope = raw, slopes[j]
    else:
        # clamp binds: points below it are covered by the kink, points
        # above it by the prev-block slope, whose LP value <= clamp
        value = clamp
        slope = slopes[prev] if prev else np.zeros(s.dim)
    witness = KinkedMajorant(anchor=x.copy(), value=value, slope=slope)
    return EnvelopeValue(value=value, level=j, witness=witness,
                         lp_solves=len(trace))


def default_bigm(s: SortedSample, x: np.ndarray) -> float:
    """Validity bound for the disjunctive reformulation, plus one."""
    x = np.asarray(x, dtype=float)
    dists = np.max(np.abs(s.points - x), axis=1)
    spread = float(s.values.max() - s.values.min())
    return spread + 2.0 * s.lipschitz * float(dists.max()) + 1.0


def eval_psi_milp(s: SortedSample, x: np.ndarray, bigM: float | None = None,
                  options: SimplexOptions | None = None) -> float:
    """Envelope value at x from the exact disjunctive program over all points.

    Each point gets a binary u deciding which side of the kink it sits
    on; s1/s2 are the slack splittings tied to u through the shared
    big-M.  A caller-supplied bigM below the validity bound
    (vmax - vmin) + 2 L max_i ||theta_i - x||_inf  is rejected.
    """
    return _disjunctive_solve(s, x, bigM, options)[0]


def _disjunctive_solve(s: SortedSample, x: np.ndarray, bigM: float | None = None,
                       options: SimplexOptions | None = None):
    """(value, optimal slope, node count) of the disjunctive program."""
    x = np.asarray(x, dtype=float)
    J, N = s.size, s.dim
    L = s.lipschitz
    dists = np.max(np.abs(s.points - x), axis=1)
    M_req = float(s.values.max() - s.values.min()) + 2.0 * L * float(dists.max())
    if bigM is None:
        bigM = M_req + 1.0
    elif bigM < M_req - 1e-12:
        raise BigMTooSmall(f"bigM={bigM} below the validity bound {M_req}")

    shift = s.v_max
    nxi = N if s.monotone else 2 * N
    n = 1 + nxi + 3 * J
    i_s1 = 1 + nxi
    i_s2 = i_s1 + J
    i_u = i_s2 + J
    D = s.points - x
    rows = np.zeros((4 * J + 1, n))
    rhs = np.zeros(4 * J + 1)
    r = np.arange(J)
    # ups + s1_i >= vhat_i
    rows[r, 0] = -1.0
    rows[r, i_s1 + r] = -1.0
    rhs[:J] = shift - s.values
    # <xi, theta_i - x> >= s1_i - s2_i
    rows[J + r, 1:1 + N] = -D
    if not s.monotone:
        rows[J + r, 1 + N:1 + 2 * N] = D
    rows[J + r, i_s1 + r] = 1.0
    rows[J + r, i_s2 + r] = -1.0
    # s1_i <= bigM u_i ; s2_i <= bigM (1 - u_i)
    rows[2 * J + r, i_s1 + r] = 1.0
    rows[2 * J + r, i_u + r] = -bigM
    rows[3 * J + r, i_s2 + r] = 1.0
    rows[3 * J + r, i_u + r] = bigM
    rhs[3 * J + r] = bigM
    rows[4 * J, 1:i_s1] = 1.0
    rhs[4 * J] = L
    lo = np.zeros(n)
    lo[0] = -_INF
    hi = np.full(n, _INF)
    hi[i_u:] = 1.0
    c = np.zeros(n)
    c[0] = 1.0
    mbp = MixedBinaryProgram(
        lp=LinearProgram(c=c, A=rows, b=rhs, lo=lo, hi=hi),
        binary=np.arange(i_u, i_u + J))
    sol = solve_milp(mbp, options)
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"disjunctive program ended {sol.status.value}")
    xi = sol.x[1:1 + N] if s.monotone else sol.x[1:1 + N] - sol.x[1 + N:1 + 2 * N]
    return sol.value + shift, xi, sol.iterations
