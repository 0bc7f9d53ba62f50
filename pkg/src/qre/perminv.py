"""Envelopes over group-permutation-invariant valuations.

Coordinates tile into M groups of K consecutive entries; the ambiguity
set keeps only functions invariant under permuting the groups.  That
shrinks the set, so this envelope dominates the plain one pointwise.
Conceptually each sample point stands for all M! of its group
permutations; instead of materializing them, the kinked-majorant
constraint embeds the assignment LP between the slope's groups and the
point's groups, which is exact because the doubly stochastic relaxation
of an assignment attains its optimum at a permutation matrix:

    <1, y> + <1, w> - <xi, x> + ups >= vhat(theta),
    y_a + w_b <= sum_k theta[aK+k] xi[bK+k]        for all a, b.

The robust counterpart carries one nonnegative matrix rho per point
with row and column sums pinned to that point's simplex weight.  A
brute-force oracle that does materialize every permutation backs both
routes in tests.  Monotone mode only.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .envelope import EnvelopeValue, KinkedMajorant, eval_psi, level_search
from .errors import (GroupCountTooLarge, InternalError, MalformedProgram,
                     NonMonotoneUnsupported, ShapeMismatch)
from .lp import LinearProgram, LpStatus, solve_lp
from .sample import RawSample, SortedSample, build_sorted_sample
from .solver import RobustProblem, SolveReport

__all__ = [
    "GroupShape",
    "permute_groups",
    "eval_psi_perm",
    "perm_oracle",
    "solve_robust_perm",
    "assignment_lp_value",
    "min_permuted_inner",
]

_INF = float("inf")
_ORACLE_MAX_GROUPS = 5


@dataclass(frozen=True)
class GroupShape:
    """M groups of K consecutive coordinates; N = M * K."""

    groups: int
    group_size: int

    def __post_init__(self):
        if self.groups < 1 or self.group_size < 1:
            raise ShapeMismatch("groups and group_size must be positive")

    @property
    def dim(self) -> int:
        return self.groups * self.group_size

    def check(self, n: int):
        if self.dim != n:
            raise ShapeMismatch(
                f"{self.groups} groups of {self.group_size} do not tile {n} coordinates")


def permute_groups(x: np.ndarray, shape: GroupShape, perm) -> np.ndarray:
    """Reorder the groups of x so block m of the result is block perm[m] of x."""
    x = np.asarray(x, dtype=float)
    shape.check(x.shape[-1])
    blocks = x.reshape(*x.shape[:-1], shape.groups, shape.group_size)
    return blocks[..., list(perm), :].reshape(x.shape)


def _require_perm_mode(s: SortedSample, shape: GroupShape):
    if not s.monotone:
        raise NonMonotoneUnsupported(
            "permutation-invariant envelopes are defined in monotone mode")
    shape.check(s.dim)


def _plp_perm(s: SortedSample, shape: GroupShape, x: np.ndarray, j: int):
    """Level-j slope program with embedded assignment duals; (value, xi)."""
    M, K = shape.groups, shape.group_size
    N, L = s.dim, s.lipschitz
    pts, vals = s.points[:j], s.values[:j]
    shift = s.v_max
    # vars: ups (1), xi (N), y (j*M), w (j*M)
    n = 1 + N + 2 * j * M
    iy = 1 + N
    iw = iy + j * M
    rows = np.zeros((j + j * M * M + 1, n))
    rhs = np.zeros(j + j * M * M + 1)
    for i in range(j):
        r = rows[i]
        r[0] = -1.0
        r[iy + i * M:iy + (i + 1) * M] = -1.0
        r[iw + i * M:iw + (i + 1) * M] = -1.0
        r[1:1 + N] = x
        rhs[i] = shift - vals[i]
    pos = j
    for i in range(j):
        theta = pts[i]
        for a in range(M):
            for b in range(M):
                r = rows[pos]
                r[iy + i * M + a] = 1.0
                r[iw + i * M + b] = 1.0
                r[1 + b * K:1 + (b + 1) * K] = -theta[a * K:(a + 1) * K]
                pos += 1
    rows[pos, 1:1 + N] = 1.0
    rhs[pos] = L
    lo = np.full(n, -_INF)
    lo[1:1 + N] = 0.0
    c = np.zeros(n)
    c[0] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=rows, b=rhs, lo=lo, hi=None))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"permutation slope program ended {sol.status.value}")
    return sol.value + shift, sol.x[1:1 + N].copy()


def eval_psi_perm(s: SortedSample, shape: GroupShape, x: np.ndarray) -> EnvelopeValue:
    """Permutation-invariant envelope value at x (monotone mode)."""
    _require_perm_mode(s, shape)
    x = np.asarray(x, dtype=float)
    slopes: dict[int, np.ndarray] = {}

    def probe(j: int) -> float:
        v, xi = _plp_perm(s, shape, x, j)
        slopes[j] = xi
        return v

    j, raw, trace, prev = level_search(s.values, probe)
    clamp = float(s.values[j - 1])
    if raw <= clamp:
        value, slope = raw, slopes[j]
    else:
        value = clamp
        slope = slopes[prev] if prev else np.zeros(s.dim)
    witness = KinkedMajorant(anchor=x.copy(), value=value, slope=slope)
    return EnvelopeValue(value=value, level=j, witness=witness,
                         lp_solves=len(trace))


def perm_oracle(s: SortedSample, shape: GroupShape, x: np.ndarray) -> float:
    """Reference route: materialize all group permutations, evaluate plainly."""
    _require_perm_mode(s, shape)
    M = shape.groups
    if M > _ORACLE_MAX_GROUPS:
        raise GroupCountTooLarge(
            f"oracle materializes M! copies; refuse M={M} > {_ORACLE_MAX_GROUPS}")
    pts = []
    vals = []
    for perm in itertools.permutations(range(M)):
        pts.append(permute_groups(s.points, shape, perm))
        vals.append(s.values)
    pts = np.vstack(pts)
    vals = np.concatenate(vals)
    uniq, idx = np.unique(np.hstack([pts, vals[:, None]]), axis=0, return_index=True)
    aug = build_sorted_sample(RawSample(points=pts[np.sort(idx)],
                                        values=vals[np.sort(idx)],
                                        lipschitz=s.lipschitz, monotone=True))
    return eval_psi(aug, x).value


def _gdj_perm(s: SortedSample, shape: GroupShape, rp: RobustProblem, j: int):
    """Level-j robust subproblem with per-point doubly stochastic couplers."""
    M, K = shape.groups, shape.group_size
    Z = rp.Z
    T, N, L = Z.dim, s.dim, s.lipschitz
    use_t = not rp.identity
    nt = N if use_t else 0
    # vars: z (T), [t (N)], ups, q, p (j), rho (j*M*M)
    n = T + nt + 2 + j + j * M * M
    iu = T + nt
    iq = iu + 1
    ip = iq + 1
    ir = ip + j

    def tcol(nn: int) -> int:
        return T + nn if use_t else nn

    rows = []
    rhs = []
    r = np.zeros(n)
    r[iu] = 1.0
    r[iq] = L
    r[ip:ip + j] = -s.values[:j]
    rows.append(r)
    rhs.append(0.0)
    for k in range(K):
        for a in range(M):
            r = np.zeros(n)
            for i in range(j):
                theta = s.points[i]
                for b in range(M):
                    r[ir + i * M * M + b * M + a] = theta[b * K + k]
            r[tcol(a * K + k)] = -1.0
            r[iq] = -1.0
            rows.append(r)
            rhs.append(0.0)
    if use_t:
        for nn, comp in enumerate(rp.G):
            for avec, beta in comp:
                r = np.zeros(n)
                r[T + nn] = 1.0
                r[:T] = -avec
                rows.append(r)
                rhs.append(beta)
    for avec, bb in zip(Z.A, Z.b):
        r = np.zeros(n)
        r[:T] = avec
        rows.append(r)
        rhs.append(bb)

    eqs = []
    eqd = []
    r = np.zeros(n)
    r[ip:ip + j] = 1.0
    eqs.append(r)
    eqd.append(1.0)
    for i in range(j):
        base = ir + i * M * M
        for b in range(M):  # row sums of rho_i
            r = np.zeros(n)
            r[base + b * M:base + (b + 1) * M] = 1.0
            r[ip + i] = -1.0
            eqs.append(r)
            eqd.append(0.0)
        for a in range(M):  # column sums of rho_i
            r = np.zeros(n)
            r[base + a:base + M * M:M] = 1.0
            r[ip + i] = -1.0
            eqs.append(r)
            eqd.append(0.0)

    lo = np.full(n, -_INF)
    hi = np.full(n, _INF)
    lo[:T] = Z.lo
    hi[:T] = Z.hi
    lo[iq] = 0.0
    lo[ip:] = 0.0
    c = np.zeros(n)
    c[iu] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=np.array(rows), b=np.array(rhs),
                                 E=np.array(eqs), d=np.array(eqd),
                                 lo=lo, hi=hi, sense="max"))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"permutation level subproblem ended {sol.status.value}")
    return sol.value, sol.x[:T].copy(), sol.x[ip:ip + j].copy()


def solve_robust_perm(s: SortedSample, shape: GroupShape,
                      rp: RobustProblem) -> SolveReport:
    """Binary search over levels with the permutation-aware subproblem."""
    _require_perm_mode(s, shape)
    if s.dim != rp.out_dim:
        raise MalformedProgram(
            f"sample dimension {s.dim} vs output dimension {rp.out_dim}")
    t0 = time.perf_counter()
    sols: dict[int, np.ndarray] = {}

    def probe(j: int) -> float:
        v, z, p = _gdj_perm(s, shape, rp, j)
        sols[j] = z
        return v

    j, ups, trace, _ = level_search(s.values, probe)
    psi = min(ups, float(s.values[j - 1]))
    return SolveReport(z_star=sols[j], psi_star=psi, level=j, probes=trace,
                       subproblem_count=len(trace),
                       wall_time_s=time.perf_counter() - t0)


def min_permuted_inner(xi: np.ndarray, theta: np.ndarray, shape: GroupShape) -> float:
    """min over group permutations sigma of <xi, sigma(theta)>, brute force."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape.check(xi.shape[0])
    shape.check(theta.shape[0])
    return min(float(xi @ permute_groups(theta, shape, perm))
               for perm in itertools.permutations(range(shape.groups)))


def assignment_lp_value(xi: np.ndarray, theta: np.ndarray, shape: GroupShape) -> float:
    """The doubly stochastic relaxation of min_sigma <xi, sigma(theta)>.

    Equals min_permuted_inner exactly: the feasible set is the Birkhoff
    polytope, whose vertices are the permutation matrices.
    """
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape.check(xi.shape[0])
    shape.check(theta.shape[0])
    M, K = shape.groups, shape.group_size
    # C[a, b] = <xi group a, theta group b>; vars Q flat by (a, b)
    C = xi.reshape(M, K) @ theta.reshape(M, K).T
    n = M * M
    eqs = []
    eqd = []
    for a in range(M):
        r = np.zeros(n)
        r[a * M:(a + 1) * M] = 1.0
        eqs.append(r)
        eqd.append(1.0)
    for b in range(M):
        r = np.zeros(n)
        r[b::M] = 1.0
        eqs.append(r)
        eqd.append(1.0)
    sol = solve_lp(LinearProgram(c=C.ravel(), E=np.array(eqs), d=np.array(eqd),
                                 lo=np.zeros(n), hi=np.ones(n)))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"assignment LP ended {sol.status.value}")
    return sol.value
