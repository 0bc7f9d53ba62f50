"""Robust maximization of the envelope over a decision polyhedron.

The problem is max_{z in Z} psi(G(z)) for a bounded polyhedral Z and
componentwise concave piecewise-affine output maps G.  With monotone
envelopes the level-j feasibility value

    G(D_j):  max ups  s.t.  G(z) >= sum_i p_i theta_tilde_i + (ups/L) 1,
             p in the simplex over D_j,  z in Z,

is non-decreasing in j, and the optimum is found by binary search over
level indices: probe j, compare the probe value against the next sample
value, halve.  That solves at most ceil(log2 J) + 1 subproblems.  The
optimal value is min{vhat(theta_j), ups_j} at the final index.

Without monotonicity the level sets are not upward closed; the
subproblem instead carries the sup-norm radius q of the membership
certificate, which stays exact only when every output map is affine
(identity included).  Piecewise maps are rejected in that mode.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .envelope import level_search
from .errors import (InfeasibleDecisionSet, InternalError, MalformedProgram,
                     NonMonotoneUnsupported)
from .lp import LinearProgram, LpStatus, solve_lp
from .sample import SortedSample

__all__ = [
    "Polyhedron",
    "RobustProblem",
    "SolveReport",
    "solve_gdj",
    "solve_robust",
    "load_problem_json",
]

_INF = float("inf")


@dataclass
class Polyhedron:
    """{ z : A z <= b, lo <= z <= hi }, validated nonempty and bounded."""

    dim: int
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    coord_bounds: np.ndarray = field(init=False)

    def __post_init__(self):
        T = int(self.dim)
        if T <= 0:
            raise MalformedProgram("polyhedron dimension must be positive")
        self.A = (np.zeros((0, T))
                  if self.A is None or np.asarray(self.A, dtype=float).size == 0
                  else np.atleast_2d(np.asarray(self.A, dtype=float)))
        if self.A.shape[1] != T:
            raise MalformedProgram(f"A has {self.A.shape[1]} columns, expected {T}")
        self.b = (np.zeros(0) if self.b is None
                  else np.atleast_1d(np.asarray(self.b, dtype=float)))
        if self.b.shape[0] != self.A.shape[0]:
            raise MalformedProgram("A and b row counts differ")
        self.lo = (np.full(T, -_INF) if self.lo is None
                   else np.broadcast_to(np.asarray(self.lo, dtype=float), (T,)).copy())
        self.hi = (np.full(T, _INF) if self.hi is None
                   else np.broadcast_to(np.asarray(self.hi, dtype=float), (T,)).copy())
        # nonempty and bounded, certified by 2T coordinate-bound LPs
        bounds = np.empty((T, 2))
        for t in range(T):
            c = np.zeros(T)
            c[t] = 1.0
            for col, sense in ((0, "min"), (1, "max")):
                sol = solve_lp(LinearProgram(c=c, A=self.A, b=self.b,
                                             lo=self.lo, hi=self.hi, sense=sense))
                if sol.status is LpStatus.INFEASIBLE:
                    raise InfeasibleDecisionSet("decision polyhedron is empty")
                if sol.status is LpStatus.UNBOUNDED:
                    raise InfeasibleDecisionSet(
                        f"decision polyhedron unbounded in coordinate {t}")
                bounds[t, col] = sol.value
        self.coord_bounds = bounds

    def chebyshev_center(self) -> np.ndarray:
        """Center of a largest inscribed Euclidean ball."""
        T = self.dim
        rows = []
        rhs = []
        for a, bb in zip(self.A, self.b):
            rows.append(np.concatenate([a, [float(np.linalg.norm(a))]]))
            rhs.append(bb)
        for t in range(T):
            e = np.zeros(T)
            if np.isfinite(self.hi[t]):
                e2 = e.copy()
                e2[t] = 1.0
                rows.append(np.concatenate([e2, [1.0]]))
                rhs.append(self.hi[t])
            if np.isfinite(self.lo[t]):
                e2 = e.copy()
                e2[t] = -1.0
                rows.append(np.concatenate([e2, [1.0]]))
                rhs.append(-self.lo[t])
        c = np.zeros(T + 1)
        c[T] = 1.0
        lo = np.full(T + 1, -_INF)
        lo[T] = 0.0
        sol = solve_lp(LinearProgram(c=c, A=np.array(rows), b=np.array(rhs),
                                     lo=lo, hi=None, sense="max"))
        if sol.status is not LpStatus.OPTIMAL:  # guarded by the load checks
            raise InternalError("chebyshev center LP failed")
        return sol.x[:T].copy()

    def contains(self, z: np.ndarray, tol: float = 1e-7) -> bool:
        z = np.asarray(z, dtype=float)
        if self.A.shape[0] and np.any(self.A @ z > self.b + tol):
            return False
        return bool(np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))


@dataclass
class RobustProblem:
    """Decision set Z plus output maps G.

    G is either the string "identity" (then the output dimension equals
    Z's) or a list of components, one per output coordinate, each a list
    of (a, beta) pieces meaning g_n(z) = min_i <a_i, z> + beta_i.
    """

    Z: Polyhedron
    G: object = "identity"

    def __post_init__(self):
        T = self.Z.dim
        if isinstance(self.G, str):
            if self.G != "identity":
                raise MalformedProgram(f"unknown output map {self.G!r}")
            return
        comps = []
        for n, comp in enumerate(self.G):
            pieces = []
            for a, beta in comp:
                a = np.asarray(a, dtype=float)
                if a.shape != (T,) or not np.all(np.isfinite(a)):
                    raise MalformedProgram(f"bad piece slope in component {n}")
                pieces.append((a, float(beta)))
            if not pieces:
                raise MalformedProgram(f"component {n} has no pieces")
            comps.append(pieces)
        if not comps:
            raise MalformedProgram("G has no components")
        self.G = comps

    @property
    def identity(self) -> bool:
        return isinstance(self.G, str)

    @property
    def out_dim(self) -> int:
        return self.Z.dim if self.identity else len(self.G)

    @property
    def affine(self) -> bool:
        return self.identity or all(len(comp) == 1 for comp in self.G)

    def apply(self, z: np.ndarray) -> np.ndarray:
        """G(z)."""
        z = np.asarray(z, dtype=float)
        if self.identity:
            return z.copy()
        return np.array([min(a @ z + beta for a, beta in comp) for comp in self.G])


@dataclass
class SolveReport:
    z_star: np.ndarray
    psi_star: float
    level: int
    probes: list[tuple[int, float]]
    subproblem_count: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {"z_star": self.z_star.tolist(), "psi_star": self.psi_star,
                "level": self.level,
                "probes": [[j, v] for j, v in self.probes],
                "subproblem_count": self.subproblem_count,
                "wall_time_s": self.wall_time_s}

    @classmethod
    def from_dict(cls, obj: dict) -> "SolveReport":
        return cls(z_star=np.asarray(obj["z_star"], dtype=float),
                   psi_star=float(obj["psi_star"]), level=int(obj["level"]),
                   probes=[(int(j), float(v)) for j, v in obj["probes"]],
                   subproblem_count=int(obj["subproblem_count"]),
                   wall_time_s=float(obj["wall_time_s"]))


def _gdj_monotone(s: SortedSample, rp: RobustProblem, j: int):
    Z = rp.Z
    T, N, L = Z.dim, s.dim, s.lipschitz
    use_t = not rp.identity
    # vars: z (T), [t (N)], ups, p (j)
    nt = N if use_t else 0
    n = T + nt + 1 + j
    iu = T + nt
    ip = iu + 1
    rows = []
    rhs = []
    for nn in range(N):
        r = np.zeros(n)
        r[ip:] = s.theta_tilde[:j, nn]
        r[iu] = 1.0 / L
        if use_t:
            r[T + nn] = -1.0
        else:
            r[nn] = -1.0
        rows.append(r)
        rhs.append(0.0)
    if use_t:
        for nn, comp in enumerate(rp.G):
            for a, beta in comp:
                r = np.zeros(n)
                r[T + nn] = 1.0
                r[:T] = -a
                rows.append(r)
                rhs.append(beta)
    for a, bb in zip(Z.A, Z.b):
        r = np.zeros(n)
        r[:T] = a
        rows.append(r)
        rhs.append(bb)
    E = np.zeros((1, n))
    E[0, ip:] = 1.0
    lo = np.full(n, -_INF)
    hi = np.full(n, _INF)
    lo[:T] = Z.lo
    hi[:T] = Z.hi
    lo[ip:] = 0.0
    c = np.zeros(n)
    c[iu] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=np.array(rows), b=np.array(rhs),
                                 E=E, d=[1.0], lo=lo, hi=hi, sense="max"))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"level subproblem ended {sol.status.value}")
    return sol.value, sol.x[:T].copy(), sol.x[ip:].copy()


def _gdj_nonmonotone(s: SortedSample, rp: RobustProblem, j: int):
    if not rp.affine:
        raise NonMonotoneUnsupported(
            "non-monotone robust solves support affine output maps only")
    Z = rp.Z
    T, N, L = Z.dim, s.dim, s.lipschitz
    # vars: z (T), ups, q, p (j); membership certificate with radius q
    n = T + 2 + j
    iu, iq, ip = T, T + 1, T + 2
    # rows of G as an affine map: G(z) = Gm z + gb
    if rp.identity:
        Gm = np.eye(T)
        gb = np.zeros(T)
    else:
        Gm = np.array([comp[0][0] for comp in rp.G])
        gb = np.array([comp[0][1] for comp in rp.G])
    rows = []
    rhs = []
    r = np.zeros(n)
    r[iu] = 1.0
    r[iq] = L
    r[ip:] = -s.values[:j]
    rows.append(r)
    rhs.append(0.0)
    for nn in range(N):
        r = np.zeros(n)
        r[ip:] = s.points[:j, nn]
        r[:T] = -Gm[nn]
        r[iq] = -1.0
        rows.append(r)
        rhs.append(gb[nn])
        r = np.zeros(n)
        r[ip:] = -s.points[:j, nn]
        r[:T] = Gm[nn]
        r[iq] = -1.0
        rows.append(r)
        rhs.append(-gb[nn])
    for a, bb in zip(Z.A, Z.b):
        r = np.zeros(n)
        r[:T] = a
        rows.append(r)
        rhs.append(bb)
    E = np.zeros((1, n))
    E[0, ip:] = 1.0
    lo = np.full(n, -_INF)
    hi = np.full(n, _INF)
    lo[:T] = Z.lo
    hi[:T] = Z.hi
    lo[iq] = 0.0
    lo[ip:] = 0.0
    c = np.zeros(n)
    c[iu] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=np.array(rows), b=np.array(rhs),
                                 E=E, d=[1.0], lo=lo, hi=hi, sense="max"))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"level subproblem ended {sol.status.value}")
    return sol.value, sol.x[:T].copy(), sol.x[ip:].copy()


def solve_gdj(s: SortedSample, rp: RobustProblem, j: int):
    """Level-j subproblem value with its maximizer z and weights p."""
    if s.dim != rp.out_dim:
        raise MalformedProgram(
            f"sample dimension {s.dim} vs output dimension {rp.out_dim}")
    if s.monotone:
        return _gdj_monotone(s, rp, j)
    return _gdj_nonmonotone(s, rp, j)


def solve_robust(s: SortedSample, rp: RobustProblem) -> SolveReport:
    """Binary search over level indices (memoized subproblems)."""
    t0 = time.perf_counter()
    sols: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def probe(j: int) -> float:
        v, z, p = solve_gdj(s, rp, j)
        sols[j] = (z, p)
        return v

    j, ups, trace, _ = level_search(s.values, probe)
    psi = min(ups, float(s.values[j - 1]))
    z = sols[j][0]
    return SolveReport(z_star=z, psi_star=psi, level=j, probes=trace,
                       subproblem_count=len(trace),
                       wall_time_s=time.perf_counter() - t0)


def load_problem_json(path: str) -> RobustProblem:
    """Read {"T", "A", "b", "lo", "hi", "G"} with G "identity" or pieces."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        T = int(obj["T"])
    except KeyError as exc:
        raise MalformedProgram("problem file missing key 'T'") from exc
    Z = Polyhedron(dim=T, A=obj.get("A"), b=obj.get("b"),
                   lo=obj.get("lo"), hi=obj.get("hi"))
    G = obj.get("G", "identity")
    if not isinstance(G, str):
        G = [[(p["a"], p["beta"]) for p in comp["pieces"]] for comp in G]
    return RobustProblem(Z=Z, G=G)
