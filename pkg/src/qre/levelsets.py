"""Upper level sets of the envelope in generator form.

For a level v with index j = kappa(v), the monotone envelope's upper
level set is the upward-closed polyhedron

    A(psi, v) = { x : x >= sum_i p_i theta_tilde_i + (v/L) 1,
                  p in the simplex over D_j },

so the translated points are its generators and v/L a diagonal shift.
Membership reduces to one feasibility LP in either mode; the explicit
generator description (and the N = 2 boundary polyline) exists only in
the monotone case, where the set is an upward hull.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonMonotoneUnsupported
from .lp import LinearProgram, LpStatus, solve_lp
from .sample import SortedSample, level_index

__all__ = ["LevelSet", "levelset_contains", "levelset_hrep"]


@dataclass
class LevelSet:
    """Generator description of one upper level set (monotone mode)."""

    level: float
    index: int
    generators: np.ndarray  # theta_tilde_1..theta_tilde_j, one per row
    shift: float            # v / L
    boundary: np.ndarray | None  # (V, 2) polyline vertices when N == 2

    def corner_points(self) -> np.ndarray:
        """The shifted generators theta_tilde_i + shift * 1."""
        return self.generators + self.shift


def levelset_contains(s: SortedSample, v: float, x: np.ndarray) -> bool:
    """Is x in the upper level set at level v?  One feasibility LP.

    Monotone mode checks x against the upward hull of the shifted
    generators.  Without monotonicity the certificate adds the sup-norm
    radius q:  some p in the simplex over D_kappa(v) must satisfy
    vhat.p - L q >= v with |sum_i p_i theta_i - x| <= q componentwise.
    """
    x = np.asarray(x, dtype=float)
    j = level_index(s, v)
    if s.monotone:
        A = s.theta_tilde[:j].T
        b = x - v / s.lipschitz
        lp = LinearProgram(c=np.zeros(j), A=A, b=b,
                           E=np.ones((1, j)), d=[1.0],
                           lo=np.zeros(j), hi=None)
    else:
        # vars p (j), q
        pts, vals = s.points[:j], s.values[:j]
        N = s.dim
        A = np.vstack([
            np.concatenate([-vals, [s.lipschitz]])[None, :],
            np.hstack([pts.T, -np.ones((N, 1))]),
            np.hstack([-pts.T, -np.ones((N, 1))]),
        ])
        b = np.concatenate([[-v], x, -x])
        lp = LinearProgram(c=np.zeros(j + 1), A=A, b=b,
                           E=np.concatenate([np.ones(j), [0.0]])[None, :], d=[1.0],
                           lo=np.zeros(j + 1), hi=None)
    return solve_lp(lp).status is LpStatus.OPTIMAL


def _pareto_min(points: np.ndarray) -> np.ndarray:
    """Rows not componentwise dominated by any other row (minimal ones)."""
    keep = []
    for i, p in enumerate(points):
        dominated = False
        for krow in points:
            if np.all(krow <= p) and np.any(krow < p):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    out = points[keep]
    # drop exact duplicates, keep first
    _, first = np.unique(out, axis=0, return_index=True)
    return out[np.sort(first)]


def _lower_left_chain(points: np.ndarray) -> np.ndarray:
    """Vertices of the boundary of conv(points) + R^2_+, left to right."""
    pts = _pareto_min(points)
    order = np.lexsort((pts[:, 1], pts[:, 0]))  # x1 asc, then x2
    pts = pts[order]
    chain: list[np.ndarray] = []
    for p in pts:
        while len(chain) >= 2:
            a, b = chain[-2], chain[-1]
            # keep only left turns; pop right turns and collinear points
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cross <= 1e-12:
                chain.pop()
            else:
                break
        chain.append(p)
    return np.array(chain)


def levelset_hrep(s: SortedSample, v: float) -> LevelSet:
    """Generator description of the level set; monotone samples only.

    For N = 2 the boundary polyline of the shifted upward hull is
    attached (the set continues with a vertical ray above the first
    vertex and a horizontal ray right of the last).
    """
    if not s.monotone:
        raise NonMonotoneUnsupported(
            "level set export needs the monotone mode; membership is still "
            "available through levelset_contains")
    v = float(v)
    j = level_index(s, v)
    shift = v / s.lipschitz
    gens = s.theta_tilde[:j].copy()
    boundary = _lower_left_chain(gens + shift) if s.dim == 2 else None
    return LevelSet(level=v, index=j, generators=gens, shift=shift,
                    boundary=boundary)
