"""Cobb-Douglas benchmark: ground truth, baselines, gap and error studies.

The test function is a profit-to-cost ratio f(x) = a0 prod x_n^{a_n} /
(c0 + sum c_n x_n) on a box with x_min > 0.  It is quasiconcave but not
monotone and not concave, which is exactly the regime the envelope is
built for.  Baselines: a piecewise-constant fit (hulls of sampled
points with greater values) and a concave min-of-affines regression on
k-means clusters.  Every study reports percent optimality gaps against
a grid-plus-polish oracle for the true maximum, or L1 distances on a
uniform grid.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from .envelope import _disjunctive_solve, eval_psi
from .errors import DegenerateCluster, InternalError, OutOfDomain, SpecViolation
from .lp import LinearProgram, LpStatus, solve_lp
from .sample import RawSample, build_sorted_sample
from .solver import Polyhedron, RobustProblem, solve_robust

__all__ = [
    "CobbDouglas",
    "cobb_value",
    "true_optimum",
    "estimate_lipschitz",
    "fit_piecewise_constant",
    "fit_concave_regression",
    "GapRow",
    "run_gap_experiment",
    "l1_error",
    "runtime_study",
    "contour_polylines",
]

_INF = float("inf")


@dataclass(frozen=True)
class CobbDouglas:
    """f(x) = alpha[0] prod x_n^alpha[n] / (costs[0] + sum costs[n] x_n)."""

    alpha: tuple = (1.0, 0.6, 0.4)
    costs: tuple = (1.0, 1.0, 2.0)
    box: tuple = (0.5, 10.0)

    def __post_init__(self):
        if len(self.alpha) != len(self.costs) or len(self.alpha) < 2:
            raise SpecViolation("need one exponent and one cost per coordinate")
        if abs(sum(self.alpha[1:]) - 1.0) > 1e-12:
            raise SpecViolation("exponents past the scale must sum to one")
        lo, hi = self.box
        if not 0.0 < lo < hi:
            raise SpecViolation("box must satisfy 0 < x_min < x_max")

    @property
    def dim(self) -> int:
        return len(self.alpha) - 1

    def grid(self, density: int) -> np.ndarray:
        lo, hi = self.box
        axes = [np.linspace(lo, hi, density)] * self.dim
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)


def cobb_value(cd: CobbDouglas, x: np.ndarray) -> np.ndarray | float:
    """f at one point or a (..., N) batch; raises off the box."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    lo, hi = cd.box
    if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
        raise OutOfDomain(f"point outside [{lo}, {hi}]^{cd.dim}")
    a = np.asarray(cd.alpha[1:])
    c = np.asarray(cd.costs[1:])
    num = cd.alpha[0] * np.prod(x ** a, axis=-1)
    den = cd.costs[0] + x @ c
    out = num / den
    return float(out) if scalar else out


def true_optimum(cd: CobbDouglas) -> tuple[np.ndarray, float]:
    """Grid search at 400 per axis, then coordinate descent with step halving."""
    if cd.dim > 3:
        raise SpecViolation("grid oracle supports at most three coordinates")
    lo, hi = cd.box
    axis = np.linspace(lo, hi, 400)
    best_x, best_v = None, -_INF
    # chunk over the first axis so the N=3 grid never materializes at once
    rest = np.stack(np.meshgrid(*[axis] * (cd.dim - 1), indexing="ij"),
                    axis=-1).reshape(-1, cd.dim - 1) if cd.dim > 1 else np.zeros((1, 0))
    for x0 in axis:
        pts = np.hstack([np.full((len(rest), 1), x0), rest])
        vals = cobb_value(cd, pts)
        i = int(np.argmax(vals))
        if vals[i] > best_v:
            best_v, best_x = float(vals[i]), pts[i].copy()
    step = float(axis[1] - axis[0])
    while step > 1e-9:
        moved = False
        for n in range(cd.dim):
            for sgn in (1.0, -1.0):
                cand = best_x.copy()
                cand[n] = min(hi, max(lo, cand[n] + sgn * step))
                v = cobb_value(cd, cand)
                if v > best_v:
                    best_x, best_v, moved = cand, float(v), True
        if not moved:
            step *= 0.5
    return best_x, best_v


def estimate_lipschitz(cd: CobbDouglas, density: int = 200) -> float:
    """max over an interior grid of the l1 gradient norm (central differences)."""
    lo, hi = cd.box
    h = (hi - lo) / (4.0 * density)
    pts = cd.grid(density)
    pts = np.clip(pts, lo + h, hi - h)
    norm = np.zeros(len(pts))
    for n in range(cd.dim):
        up, dn = pts.copy(), pts.copy()
        up[:, n] += h
        dn[:, n] -= h
        norm += np.abs(cobb_value(cd, up) - cobb_value(cd, dn)) / (2.0 * h)
    return float(norm.max())


class PiecewiseConstantFit:
    """evaluator(x) = max{vhat_j : x in conv(theta_1..theta_j)}, else -inf."""

    def __init__(self, points: np.ndarray, values: np.ndarray):
        order = np.argsort(-values, kind="stable")
        self.points = points[order]
        self.values = values[order]

    def _member(self, x: np.ndarray, j: int) -> bool:
        E = np.vstack([self.points[:j].T, np.ones(j)])
        d = np.concatenate([x, [1.0]])
        sol = solve_lp(LinearProgram(c=np.zeros(j), E=E, d=d,
                                     lo=np.zeros(j), hi=None))
        return sol.status is LpStatus.OPTIMAL

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        J = len(self.values)
        if not self._member(x, J):
            return -_INF
        lo, hi = 1, J
        while lo < hi:
            mid = (lo + hi) // 2
            if self._member(x, mid):
                hi = mid
            else:
                lo = mid + 1
        return float(self.values[lo - 1])

    def maximize(self) -> tuple[np.ndarray, float]:
        """The fit's max over the hull is its best sampled value."""
        return self.points[0].copy(), float(self.values[0])


def fit_piecewise_constant(points, values) -> PiecewiseConstantFit:
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(points) == 0:
        raise SpecViolation("need at least one sample point")
    return PiecewiseConstantFit(points, values)


class ConcaveRegressionFit:
    """min of per-cluster affine fits; concave piecewise linear."""

    def __init__(self, coeffs: np.ndarray, offsets: np.ndarray):
        self.coeffs = coeffs
        self.offsets = offsets

    def __call__(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        vals = x @ self.coeffs.T + self.offsets
        return vals.min(axis=-1) if x.ndim > 1 else float(vals.min())

    def maximize(self, box: tuple) -> tuple[np.ndarray, float]:
        lo, hi = box
        k, N = self.coeffs.shape
        # vars (x, t): max t s.t. t <= a_i x + b_i, x in box
        A = np.hstack([-self.coeffs, np.ones((k, 1))])
        c = np.zeros(N + 1)
        c[-1] = 1.0
        lov = np.full(N + 1, lo)
        hiv = np.full(N + 1, hi)
        lov[-1], hiv[-1] = -_INF, _INF
        sol = solve_lp(LinearProgram(c=c, A=A, b=self.offsets, lo=lov, hi=hiv,
                                     sense="max"))
        if sol.status is not LpStatus.OPTIMAL:
            raise InternalError(f"fit maximization ended {sol.status.value}")
        return sol.x[:N].copy(), sol.value


def fit_concave_regression(points, values, k: int | None = None,
                           seed: int = 0) -> ConcaveRegressionFit:
    """k-means clusters, one least-squares affine per cluster, min of fits.

    Clusters with fewer than N+1 points cannot pin an affine function
    down and are merged into the nearest cluster by centroid distance.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    J, N = points.shape
    if J < N + 1:
        raise DegenerateCluster(f"{J} points cannot fit an affine function in {N}-d")
    if k is None:
        k = min(max(3, -(-J // 20)), 15, J // (N + 1))
    k = max(1, min(k, J))
    if J < k * (N + 1):
        raise DegenerateCluster(f"{J} points cannot fill {k} clusters of {N + 1}")
    labels = (np.zeros(J, dtype=int) if k == 1 else
              KMeans(n_clusters=k, init="k-means++", n_init=1, max_iter=50,
                     random_state=seed).fit(points).labels_)
    groups = [np.flatnonzero(labels == c) for c in range(k)]
    groups = [g for g in groups if len(g)]
    while len(groups) > 1:
        sizes = [len(g) for g in groups]
        i = int(np.argmin(sizes))
        if sizes[i] >= N + 1:
            break
        cents = np.array([points[g].mean(axis=0) for g in groups])
        dist = np.linalg.norm(cents - cents[i], axis=1)
        dist[i] = _INF
        j = int(np.argmin(dist))
        groups[j] = np.concatenate([groups[j], groups[i]])
        del groups[i]
    coeffs, offsets = [], []
    for g in groups:
        A = np.hstack([points[g], np.ones((len(g), 1))])
        w = np.linalg.lstsq(A, values[g], rcond=None)[0]
        coeffs.append(w[:N])
        offsets.append(w[N])
    return ConcaveRegressionFit(np.array(coeffs), np.array(offsets))


@dataclass(frozen=True)
class GapRow:
    """Aggregate percent optimality gap of one method at one sample size."""

    method: str
    J: int
    mean: float
    std: float
    max: float

    def __post_init__(self):
        if self.mean < -0.5 or self.max < -0.5:
            raise InternalError("materially negative gap: oracle is broken")


_METHODS = ("envelope", "piecewise_constant", "concave_regression")


def _draw_sample(cd: CobbDouglas, J: int, rep: int, seed: int):
    rng = np.random.default_rng([seed, rep, J])
    lo, hi = cd.box
    pts = rng.uniform(lo, hi, (J, cd.dim))
    return pts, np.asarray(cobb_value(cd, pts))


def _one_rep(cd: CobbDouglas, J: int, rep: int, seed: int, lipschitz: float,
             f_star: float) -> dict[str, float]:
    pts, vals = _draw_sample(cd, J, rep, seed)
    lo, hi = cd.box
    box = Polyhedron(dim=cd.dim, A=np.zeros((0, cd.dim)), b=np.zeros(0),
                     lo=np.full(cd.dim, lo), hi=np.full(cd.dim, hi))
    s = build_sorted_sample(RawSample(points=pts, values=vals,
                                      lipschitz=lipschitz, monotone=False))
    rep_env = solve_robust(s, RobustProblem(Z=box))
    xs = {
        "envelope": np.clip(rep_env.z_star, lo, hi),
        "piecewise_constant": fit_piecewise_constant(pts, vals).maximize()[0],
        "concave_regression":
            fit_concave_regression(pts, vals, seed=seed).maximize(cd.box)[0],
    }
    out = {}
    for name, x in xs.items():
        gap = 100.0 * (f_star - float(cobb_value(cd, x))) / f_star
        if gap < -0.5:
            raise InternalError(f"{name} gap {gap:.3f}%: oracle is broken")
        out[name] = gap
    return out


def _pool_size(tasks: int, workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("QRE_THREADS", "")
        workers = int(env) if env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(workers, tasks))


def run_gap_experiment(cd: CobbDouglas, J_list=(32, 128), reps: int = 20,
                       seed: int = 0, lipschitz: float = 0.30,
                       workers: int | None = None) -> list[GapRow]:
    """Percent gap table over methods and sample sizes.

    Each (J, rep) task draws its points from default_rng([seed, rep, J]),
    so the table is identical no matter how the pool schedules tasks.
    """
    if reps < 1:
        raise SpecViolation("need at least one replication")
    _, f_star = true_optimum(cd)
    tasks = [(J, rep) for J in J_list for rep in range(reps)]
    nw = _pool_size(len(tasks), workers)
    if nw == 1:
        results = {t: _one_rep(cd, t[0], t[1], seed, lipschitz, f_star)
                   for t in tasks}
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            futs = {t: pool.submit(_one_rep, cd, t[0], t[1], seed, lipschitz,
                                   f_star) for t in tasks}
            results = {t: f.result() for t, f in futs.items()}
    rows = []
    for J in J_list:
        for m in _METHODS:
            g = np.array([results[(J, rep)][m] for rep in range(reps)])
            rows.append(GapRow(method=m, J=int(J), mean=float(g.mean()),
                               std=float(g.std()), max=float(g.max())))
    return rows


def l1_error(cd: CobbDouglas, evaluator, density: int = 40) -> float:
    """Mean |evaluator - f| on a uniform grid; -inf clipped to min f."""
    if density < 10:
        raise SpecViolation("grid density below 10 is too coarse to mean anything")
    pts = cd.grid(density)
    truth = np.asarray(cobb_value(cd, pts))
    approx = np.array([float(evaluator(p)) for p in pts])
    approx = np.maximum(approx, truth.min())
    return float(np.mean(np.abs(approx - truth)))


def runtime_study(cd: CobbDouglas, J_list=(16, 64, 256), reps: int = 5,
                  seed: int = 0, lipschitz: float = 0.30) -> list[dict]:
    """LP counts of the binary-search evaluator vs node counts of the MILP.

    Counts, not wall clock: the contrast is ceil(log2 J) + 1 small LPs
    against a branch-and-bound tree that grows with J.
    """
    rows = []
    lo, hi = cd.box
    for J in J_list:
        lps, nodes, t_lp, t_milp = [], [], 0.0, 0.0
        for rep in range(reps):
            pts, vals = _draw_sample(cd, J, rep, seed)
            s = build_sorted_sample(RawSample(points=pts, values=vals,
                                              lipschitz=lipschitz, monotone=False))
            x = np.random.default_rng([seed, rep, J, 1]).uniform(lo, hi, cd.dim)
            t0 = time.perf_counter()
            e = eval_psi(s, x)
            t_lp += time.perf_counter() - t0
            t0 = time.perf_counter()
            v, _, n = _disjunctive_solve(s, x)
            t_milp += time.perf_counter() - t0
            if abs(e.value - v) > 1e-5:
                raise InternalError("binary search and MILP disagree")
            lps.append(e.lp_solves)
            nodes.append(n)
        rows.append({"J": int(J), "lp_solves_mean": float(np.mean(lps)),
                     "milp_nodes_mean": float(np.mean(nodes)),
                     "lp_seconds": t_lp / reps, "milp_seconds": t_milp / reps})
    return rows


def contour_polylines(fn, box: tuple, levels, density: int = 80) -> list[dict]:
    """2-d level curves of fn as polyline rows (level, segment, x1, x2)."""
    from contourpy import contour_generator
    lo, hi = box
    axis = np.linspace(lo, hi, density)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    Z = np.array([[float(fn(np.array([x, y]))) for y in axis] for x in axis])
    Z = np.where(np.isfinite(Z), Z, np.nanmin(Z[np.isfinite(Z)]) - 1.0)
    gen = contour_generator(X, Y, Z)
    rows = []
    for lev in levels:
        for si, seg in enumerate(gen.lines(float(lev))):
            for x1, x2 in np.asarray(seg):
                rows.append({"level": float(lev), "segment": si,
                             "x1": float(x1), "x2": float(x2)})
    return rows
