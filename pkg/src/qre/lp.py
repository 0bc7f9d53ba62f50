"""Dense linear and mixed-binary programming.

Bounded-variable primal simplex on the computational form

    min c.y   s.t.   W y = r,   lo <= y <= hi,

obtained by appending one slack per row (inequality slacks in [0, inf),
equality slacks fixed at zero).  Phase 1 introduces artificial columns
only on rows the bound-respecting starting point violates.  Pricing is
Dantzig's rule with Bland's rule engaged after a run of degenerate
pivots; the dense basis inverse is maintained by rank-one updates with
periodic refactorization.  Binary restrictions are handled by best-first
branch and bound on the most fractional variable.

All storage is dense numpy.  This is aimed at the small, repeatedly
solved programs the rest of the package generates, not at sparse or
large-scale work.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import IterationLimit, MalformedProgram, NodeLimit

_INF = float("inf")

# nonbasic/basic markers
_AT_LOWER = 0
_AT_UPPER = 1
_FREE = 2
_BASIC = 3


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class SimplexOptions:
    """Tolerances and budgets for the simplex and branch-and-bound loops."""

    tol_pivot: float = 1e-9
    tol_feas: float = 1e-7
    tol_integrality: float = 1e-6
    max_iter: int | None = None
    refactor_every: int = 128
    bland_degenerate_factor: int = 3
    node_limit: int = 1_000_000
    max_binaries: int = 64


_DEFAULT_OPTIONS = SimplexOptions()


def _vec(v, n: int, name: str, fill: float = 0.0) -> np.ndarray:
    if v is None:
        return np.full(n, fill, dtype=float)
    out = np.atleast_1d(np.asarray(v, dtype=float))
    if out.shape != (n,):
        raise MalformedProgram(f"{name} must have shape ({n},), got {out.shape}")
    return out.copy()


def _mat(M, n: int, name: str) -> np.ndarray:
    if M is None:
        return np.zeros((0, n), dtype=float)
    out = np.asarray(M, dtype=float)
    if out.ndim != 2 or out.shape[1] != n:
        raise MalformedProgram(f"{name} must have {n} columns, got shape {out.shape}")
    return out.copy()


@dataclass
class LinearProgram:
    """min or max of c.x subject to A x <= b, E x = d, lo <= x <= hi."""

    c: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    E: np.ndarray | None = None
    d: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = self.c.shape[0]
        if n == 0:
            raise MalformedProgram("program has no variables")
        self.A = _mat(self.A, n, "A")
        self.b = _vec(self.b, self.A.shape[0], "b")
        self.E = _mat(self.E, n, "E")
        self.d = _vec(self.d, self.E.shape[0], "d")
        self.lo = _vec(self.lo, n, "lo", fill=-_INF)
        self.hi = _vec(self.hi, n, "hi", fill=_INF)
        if self.sense not in ("min", "max"):
            raise MalformedProgram(f"sense must be 'min' or 'max', got {self.sense!r}")
        for name, arr in (("c", self.c), ("A", self.A), ("b", self.b),
                          ("E", self.E), ("d", self.d)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise MalformedProgram(f"{name} contains a non-finite entry")
        if np.any(np.isnan(self.lo)) or np.any(np.isnan(self.hi)):
            raise MalformedProgram("bounds contain NaN")
        if np.any(self.lo > self.hi):
            raise MalformedProgram("lo > hi for some variable")

    @property
    def nvars(self) -> int:
        return self.c.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    value: float
    x: np.ndarray
    iterations: int
    dual_ineq: np.ndarray
    dual_eq: np.ndarray


@dataclass
class MixedBinaryProgram:
    """A LinearProgram plus a set of variables restricted to {0, 1}."""

    lp: LinearProgram
    binary: np.ndarray

    def __post_init__(self):
        self.binary = np.unique(np.asarray(self.binary, dtype=int))
        n = self.lp.nvars
        if self.binary.size and (self.binary.min() < 0 or self.binary.max() >= n):
            raise MalformedProgram("binary index out of range")
        # binaries live inside [0, 1]; tighten the continuous bounds to match
        lo = self.lp.lo.copy()
        hi = self.lp.hi.copy()
        lo[self.binary] = np.maximum(lo[self.binary], 0.0)
        hi[self.binary] = np.minimum(hi[self.binary], 1.0)
        if np.any(lo[self.binary] > hi[self.binary]):
            raise MalformedProgram("binary variable with empty bound interval")
        self.lp = replace(self.lp, lo=lo, hi=hi)


class _Prepared:
    """Row form shared by solve_lp and every branch-and-bound node."""

    __slots__ = ("rows", "rhs", "is_eq", "c_min", "lo", "hi", "n", "flip")

    def __init__(self, lp: LinearProgram):
        self.n = lp.nvars
        self.rows = np.vstack([lp.A, lp.E]) if lp.E.shape[0] else lp.A
        self.rhs = np.concatenate([lp.b, lp.d])
        mi = lp.A.shape[0]
        self.is_eq = np.zeros(self.rows.shape[0], dtype=bool)
        self.is_eq[mi:] = True
        self.flip = lp.sense == "max"
        self.c_min = -lp.c if self.flip else lp.c.copy()
        self.lo = lp.lo
        self.hi = lp.hi


def _start_values(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Finite bound nearest zero, or zero for free variables."""
    start = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    both = np.isfinite(lo) & np.isfinite(hi)
    start[both] = np.where(np.abs(lo[both]) <= np.abs(hi[both]), lo[both], hi[both])
    return start


class _Simplex:
    """Mutable simplex state over the slack-augmented system."""

    def __init__(self, prep: _Prepared, lo: np.ndarray, hi: np.ndarray,
                 opts: SimplexOptions):
        rows, rhs, is_eq = prep.rows, prep.rhs, prep.is_eq
        m, n = rows.shape
        self.m, self.n = m, n
        self.opts = opts
        self.W = np.hstack([rows, np.eye(m)]) if m else np.zeros((0, n))
        self.rhs = rhs
        self.lo = np.concatenate([lo, np.where(is_eq, 0.0, 0.0)])
        self.hi = np.concatenate([hi, np.where(is_eq, 0.0, _INF)])
        self.c = np.concatenate([prep.c_min, np.zeros(m)])
        nf = n + m

        x = np.empty(nf)
        x[:n] = _start_values(lo, hi)
        stat = np.full(nf, _AT_LOWER, dtype=np.int8)
        stat[:n][~np.isfinite(lo) & ~np.isfinite(hi)] = _FREE
        at_hi = np.isfinite(hi) & (x[:n] == hi) & ~(np.isfinite(lo) & (x[:n] == lo))
        stat[:n][at_hi] = _AT_UPPER

        sl = rhs - rows @ x[:n] if m else np.zeros(0)
        sl_clamped = np.where(is_eq, 0.0, np.maximum(sl, 0.0))
        resid = sl - sl_clamped
        scale = 1.0 + np.abs(rhs)
        need_art = np.abs(resid) > 1e-11 * scale

        self.n_art_rows = np.flatnonzero(need_art)
        basis = np.arange(n, n + m)
        x[n:] = np.where(need_art, sl_clamped, sl)
        if self.n_art_rows.size:
            k = self.n_art_rows.size
            art_cols = np.zeros((m, k))
            sgn = np.sign(resid[self.n_art_rows])
            art_cols[self.n_art_rows, np.arange(k)] = sgn
            self.W = np.hstack([self.W, art_cols])
            self.lo = np.concatenate([self.lo, np.zeros(k)])
            self.hi = np.concatenate([self.hi, np.full(k, _INF)])
            self.c = np.concatenate([self.c, np.zeros(k)])
            stat = np.concatenate([stat, np.full(k, _AT_LOWER, dtype=np.int8)])
            x = np.concatenate([x, np.abs(resid[self.n_art_rows])])
            basis[self.n_art_rows] = nf + np.arange(k)
            # slacks on artificial rows sit nonbasic at the clamped value
            stat[n + self.n_art_rows] = _AT_LOWER
        self.art = np.arange(nf, self.W.shape[1])
        self.x = x
        self.stat = stat
        self.basis = basis
        self.stat[self.basis] = _BASIC
        self.Binv = np.eye(m)
        if self.art.size:
            sgn = np.sign(resid[self.n_art_rows])
            self.Binv[self.n_art_rows, self.n_art_rows] = sgn
        self.iters = 0
        self.degenerate = 0
        self.bland = False
        nf_all = self.W.shape[1]
        self.max_iter = opts.max_iter or (1000 + 12 * (m + nf_all))

    def _refactor(self):
        WB = self.W[:, self.basis]
        try:
            self.Binv = np.linalg.inv(WB)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise MalformedProgram("singular basis during refactorization") from exc
        x_nb = self.x.copy()
        x_nb[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.rhs - self.W @ x_nb)

    def run(self, c: np.ndarray) -> str:
        """Minimize c over the current basis; returns 'optimal' or 'unbounded'."""
        opts = self.opts
        W, lo, hi = self.W, self.lo, self.hi
        movable = hi > lo
        bland_after = opts.bland_degenerate_factor * W.shape[1]
        while True:
            self.iters += 1
            if self.iters > self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} pivots")
            if self.iters % opts.refactor_every == 0:
                self._refactor()
            y = c[self.basis] @ self.Binv
            rc = c - y @ W
            stat = self.stat
            can_inc = ((stat == _AT_LOWER) | (stat == _FREE)) & movable
            can_dec = ((stat == _AT_UPPER) | (stat == _FREE)) & movable
            score_inc = np.where(can_inc, -rc, 0.0)
            score_dec = np.where(can_dec, rc, 0.0)
            score = np.maximum(score_inc, score_dec)
            if self.bland:
                idx = np.flatnonzero(score > opts.tol_pivot)
                if idx.size == 0:
                    return "optimal"
                q = int(idx[0])
            else:
                q = int(np.argmax(score))
                if score[q] <= opts.tol_pivot:
                    return "optimal"
            dirn = 1.0 if score_inc[q] >= score_dec[q] else -1.0

            d = self.Binv @ W[:, q]
            delta = dirn * d
            xB = self.x[self.basis]
            loB = lo[self.basis]
            hiB = hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_dec = np.where(delta > opts.tol_pivot, (xB - loB) / delta, _INF)
                t_inc = np.where(delta < -opts.tol_pivot, (xB - hiB) / delta, _INF)
            t_rows = np.minimum(t_dec, t_inc)
            t_rows = np.where(np.isnan(t_rows), _INF, np.maximum(t_rows, 0.0))
            t_min_rows = t_rows.min() if t_rows.size else _INF
            t_self = hi[q] - lo[q]

            if t_self <= t_min_rows:
                if not np.isfinite(t_self):
                    return "unbounded"
                # bound flip, basis unchanged
                self.x[self.basis] = xB - t_self * delta
                self.x[q] = hi[q] if dirn > 0 else lo[q]
                self.stat[q] = _AT_UPPER if dirn > 0 else _AT_LOWER
                if t_self <= 1e-11:
                    self._note_degenerate(bland_after)
                continue
            if not np.isfinite(t_min_rows):
                return "unbounded"

            tied = np.flatnonzero(t_rows <= t_min_rows + 1e-11)
            if self.bland:
                r = int(tied[np.argmin(self.basis[tied])])
            else:
                r = int(tied[np.argmax(np.abs(delta[tied]))])
            piv = d[r]
            if abs(piv) < opts.tol_pivot:  # pragma: no cover
                self._refactor()
                continue
            t = t_rows[r]
            leaving = self.basis[r]
            self.x[self.basis] = xB - t * delta
            self.x[q] = self.x[q] + dirn * t
            hit_lower = delta[r] > 0
            self.x[leaving] = lo[leaving] if hit_lower else hi[leaving]
            self.stat[leaving] = _AT_LOWER if hit_lower else _AT_UPPER
            self.basis[r] = q
            self.stat[q] = _BASIC
            row = self.Binv[r] / piv
            dd = d.copy()
            dd[r] = 0.0
            self.Binv -= np.outer(dd, row)
            self.Binv[r] = row
            if t <= 1e-11:
                self._note_degenerate(bland_after)
            else:
                self.degenerate = 0

    def _note_degenerate(self, bland_after: int):
        self.degenerate += 1
        if self.degenerate >= bland_after:
            self.bland = True

    def drive_out_artificials(self):
        """Pivot zero-valued artificials out of the basis where possible."""
        n_real = self.n + self.m
        for r in range(self.m):
            if self.basis[r] < n_real:
                continue
            row = self.Binv[r] @ self.W[:, :n_real]
            row[self.stat[:n_real] == _BASIC] = 0.0
            row[self.hi[:n_real] <= self.lo[:n_real]] = 0.0
            cand = np.flatnonzero(np.abs(row) > 1e-9)
            if cand.size == 0:
                continue  # redundant row, artificial stays pinned at zero
            q = int(cand[0])
            d = self.Binv @ self.W[:, q]
            leaving = self.basis[r]
            self.stat[leaving] = _AT_LOWER
            self.x[leaving] = 0.0
            self.basis[r] = q
            self.stat[q] = _BASIC
            piv = d[r]
            rr = self.Binv[r] / piv
            dd = d.copy()
            dd[r] = 0.0
            self.Binv -= np.outer(dd, rr)
            self.Binv[r] = rr


def _solve_prepared(prep: _Prepared, lo: np.ndarray, hi: np.ndarray,
                    opts: SimplexOptions):
    """Returns (status, x, min_value, iterations, row_duals)."""
    if np.any(lo > hi):
        return LpStatus.INFEASIBLE, None, _INF, 0, None
    sx = _Simplex(prep, lo, hi, opts)
    if sx.art.size:
        c1 = np.zeros(sx.W.shape[1])
        c1[sx.art] = 1.0
        out = sx.run(c1)
        if out != "optimal":  # pragma: no cover
            raise MalformedProgram("phase 1 cannot be unbounded")
        infeas = float(c1 @ sx.x)
        if infeas > opts.tol_feas:
            return LpStatus.INFEASIBLE, None, _INF, sx.iters, None
        sx.lo[sx.art] = 0.0
        sx.hi[sx.art] = 0.0
        sx.x[sx.art] = 0.0
        sx.drive_out_artificials()
    c2 = np.zeros(sx.W.shape[1])
    c2[:sx.n] = prep.c_min
    out = sx.run(c2)
    if out == "unbounded":
        return LpStatus.UNBOUNDED, None, -_INF, sx.iters, None
    x = sx.x[:sx.n].copy()
    value = float(prep.c_min @ x)
    y = c2[sx.basis] @ sx.Binv
    return LpStatus.OPTIMAL, x, value, sx.iters, y


def solve_lp(lp: LinearProgram, options: SimplexOptions | None = None) -> LpSolution:
    """Solve a linear program to a vertex optimum.

    Row duals are reported so that, for an optimal solution, the
    objective gradient decomposes over active rows:  for sense 'min'
    the multiplier of a binding `A x <= b` row is <= 0, for sense 'max'
    it is >= 0 and measures the marginal value of relaxing the row.
    """
    opts = options or _DEFAULT_OPTIONS
    prep = _Prepared(lp)
    status, x, val_min, iters, y = _solve_prepared(prep, prep.lo, prep.hi, opts)
    mi = lp.A.shape[0]
    if status is not LpStatus.OPTIMAL:
        value = _INF if status is LpStatus.INFEASIBLE else -_INF
        if prep.flip:
            value = -value
        return LpSolution(status, value, np.full(lp.nvars, np.nan), iters,
                          np.full(mi, np.nan), np.full(lp.E.shape[0], np.nan))
    value = -val_min if prep.flip else val_min
    duals = -y if prep.flip else y
    return LpSolution(LpStatus.OPTIMAL, value, x, iters,
                      duals[:mi].copy(), duals[mi:].copy())


def solve_milp(mbp: MixedBinaryProgram,
               options: SimplexOptions | None = None) -> LpSolution:
    """Exact best-first branch and bound over the binary variables.

    Branches on the most fractional binary (ties to the lowest index),
    prunes at zero gap, and counts every node LP in `iterations`.  With
    no binaries this defers to solve_lp outright.
    """
    opts = options or _DEFAULT_OPTIONS
    if mbp.binary.size == 0:
        return solve_lp(mbp.lp, opts)
    if mbp.binary.size > opts.max_binaries:
        raise MalformedProgram(
            f"{mbp.binary.size} binaries exceeds the limit {opts.max_binaries}")
    prep = _Prepared(mbp.lp)
    bidx = mbp.binary
    tol = opts.tol_integrality

    nodes = 0

    def node_solve(blo, bhi):
        nonlocal nodes
        nodes += 1
        if nodes > opts.node_limit:
            raise NodeLimit(f"branch and bound exceeded {opts.node_limit} nodes")
        lo = prep.lo.copy()
        hi = prep.hi.copy()
        lo[bidx] = blo
        hi[bidx] = bhi
        return _solve_prepared(prep, lo, hi, opts)

    root_lo = prep.lo[bidx].copy()
    root_hi = prep.hi[bidx].copy()
    status, x, val, _, _ = node_solve(root_lo, root_hi)
    if status is LpStatus.INFEASIBLE:
        return LpSolution(LpStatus.INFEASIBLE, _INF if not prep.flip else -_INF,
                          np.full(mbp.lp.nvars, np.nan), nodes,
                          np.zeros(0), np.zeros(0))
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, -_INF if not prep.flip else _INF,
                          np.full(mbp.lp.nvars, np.nan), nodes,
                          np.zeros(0), np.zeros(0))

    inc_val = _INF
    inc_x = None
    heap = []
    seq = 0

    def try_incumbent(xc, vc):
        nonlocal inc_val, inc_x
        if vc < inc_val - 1e-12:
            inc_val = vc
            inc_x = xc.copy()

    def expand(blo, bhi, xn, vn):
        nonlocal seq
        u = xn[bidx]
        frac = np.abs(u - np.round(u))
        if frac.max(initial=0.0) <= tol:
            try_incumbent(xn, vn)
            return
        k = int(np.argmax(frac))  # most fractional, first index on ties
        for fixed in (0.0, 1.0):
            lo2 = blo.copy()
            hi2 = bhi.copy()
            lo2[k] = fixed
            hi2[k] = fixed
            seq += 1
            heapq.heappush(heap, (vn, seq, lo2, hi2))

    frac0 = np.abs(x[bidx] - np.round(x[bidx]))
    if frac0.max(initial=0.0) > tol:
        # rounding heuristic: fix every binary at its nearest integer
        rb = np.round(x[bidx])
        st, xh, vh, _, _ = node_solve(rb, rb)
        if st is LpStatus.OPTIMAL:
            fh = np.abs(xh[bidx] - np.round(xh[bidx]))
            if fh.max(initial=0.0) <= tol:
                try_incumbent(xh, vh)
    expand(root_lo, root_hi, x, val)

    while heap:
        bound, _, blo, bhi = heapq.heappop(heap)
        if bound >= inc_val - 1e-9:
            break
        status, x, val, _, _ = node_solve(blo, bhi)
        if status is not LpStatus.OPTIMAL or val >= inc_val - 1e-9:
            continue
        expand(blo, bhi, x, val)

    if inc_x is None:
        return LpSolution(LpStatus.INFEASIBLE, _INF if not prep.flip else -_INF,
                          np.full(mbp.lp.nvars, np.nan), nodes,
                          np.zeros(0), np.zeros(0))
    value = -inc_val if prep.flip else inc_val
    return LpSolution(LpStatus.OPTIMAL, value, inc_x, nodes, np.zeros(0), np.zeros(0))
