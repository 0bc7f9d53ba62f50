"""Target representation of the envelope, monotone mode.

The upper level set at height ups is a shifted acceptance set: x lies
in it exactly when mu_j(x - tau(ups) 1) <= 0, where j = kappa(ups),
mu_j measures how far a point sits below the hull of the first j
shifted generators, and tau(ups) = ups / L - c_j folds the level shift
and the per-family calibration constant into a scalar target.  The
calibration c_j makes mu_j(0) = 0 for a decision maker sitting at the
origin.  Sweeping ups turns the envelope into a family of acceptance
sets plus a piecewise affine, nondecreasing target path; that pair is
exportable on its own (TargetSpec) and evaluating it back by bisection
recovers the envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InternalError, NonMonotoneUnsupported, SpecViolation
from .lp import LinearProgram, LpStatus, solve_lp
from .sample import SortedSample, level_index

__all__ = [
    "compute_acceptance",
    "AcceptanceFamily",
    "eval_mu",
    "eval_target_representation",
    "TargetSegment",
    "TargetSpec",
    "from_family",
    "eval_constructed_valuation",
]

_INF = float("inf")
_BISECT_TOL = 1e-7


def _min_envelope_coord(gens: np.ndarray, rhs: np.ndarray) -> float:
    """min m s.t. gens^T p <= rhs + m 1, p in the simplex."""
    j, N = gens.shape
    n = 1 + j
    A = np.hstack([-np.ones((N, 1)), gens.T])
    E = np.concatenate([[0.0], np.ones(j)])[None, :]
    lo = np.full(n, -_INF)
    lo[1:] = 0.0
    c = np.zeros(n)
    c[0] = 1.0
    sol = solve_lp(LinearProgram(c=c, A=A, b=rhs, E=E, d=np.ones(1), lo=lo, hi=None))
    if sol.status is not LpStatus.OPTIMAL:
        raise InternalError(f"acceptance program ended {sol.status.value}")
    return sol.value


def _require_monotone(s: SortedSample):
    if not s.monotone:
        raise NonMonotoneUnsupported(
            "the target representation is defined in monotone mode")


def compute_acceptance(s: SortedSample) -> np.ndarray:
    """Calibration constants c_j = -min{m : m 1 >= theta_tilde^T p}, all j."""
    _require_monotone(s)
    zero = np.zeros(s.dim)
    return np.array([-_min_envelope_coord(s.theta_tilde[:j], zero)
                     for j in range(1, s.size + 1)])


@dataclass(frozen=True)
class AcceptanceFamily:
    """The sample's shifted-generator hulls with their calibrations."""

    sample: SortedSample
    shifts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.shifts is None:
            object.__setattr__(self, "shifts", compute_acceptance(self.sample))
        if len(self.shifts) != self.sample.size:
            raise SpecViolation("one calibration constant per sample point")


def eval_mu(fam: AcceptanceFamily, j: int, x: np.ndarray) -> float:
    """mu_j(x): how far x sits below the calibrated level-j hull.

    mu_j(x) <= 0 iff x + m 1 dominates some convex combination of the
    first j shifted generators for an m <= 0; mu_j(0) = 0 by choice of
    the calibration constant.
    """
    s = fam.sample
    if not 1 <= j <= s.size:
        raise SpecViolation(f"family index {j} outside 1..{s.size}")
    x = np.asarray(x, dtype=float)
    return _min_envelope_coord(s.theta_tilde[:j], x - fam.shifts[j - 1])


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    """Largest point of a down-set {pred true} in [lo, hi], to within tol."""
    if pred(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def eval_target_representation(s: SortedSample, x: np.ndarray,
                               fam: AcceptanceFamily | None = None,
                               tol: float = _BISECT_TOL) -> float:
    """Envelope value recovered from the acceptance-set representation.

    Bisection over ups on the predicate mu_kappa(ups)(x - tau(ups) 1) <= 0
    with tau(ups) = ups / L - c_kappa(ups); the predicate cuts a down-set
    because raising ups both shrinks the family and raises the target.
    """
    _require_monotone(s)
    x = np.asarray(x, dtype=float)
    if fam is None:
        fam = AcceptanceFamily(s)

    def pred(v: float) -> bool:
        j = level_index(s, v)
        tau = v / s.lipschitz - fam.shifts[j - 1]
        return eval_mu(fam, j, x - tau) <= 1e-9

    hi = float(s.v_max)
    pts = np.vstack([s.points, x])
    diam = float(np.max(np.abs(pts[:, None, :] - pts[None, :, :])))
    lo = float(s.values.min()) - s.lipschitz * diam - 1.0
    if not pred(lo):
        raise InternalError("lower bracket outside the bottom level set")
    return _bisect(pred, lo, hi, tol)


@dataclass(frozen=True)
class TargetSegment:
    """One ups-interval: a fixed generator hull and an affine target path."""

    family_size: int
    generators: np.ndarray
    tau_base: np.ndarray
    tau_dir: np.ndarray

    def tau(self, v: float) -> np.ndarray:
        return self.tau_base + self.tau_dir * v


@dataclass(frozen=True)
class TargetSpec:
    """Self-contained export of the representation.

    Segment d covers (breakpoints[d-1], breakpoints[d]], closed on the
    right like the level-index convention; the last segment is capped
    by top_value, the largest attainable envelope value.
    """

    breakpoints: np.ndarray
    top_value: float
    segments: tuple[TargetSegment, ...]

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", bps)
        if bps.ndim != 1:
            raise SpecViolation("breakpoints must be a vector")
        if np.any(np.diff(bps) <= 0):
            raise SpecViolation("breakpoints must increase strictly")
        if len(self.segments) != len(bps) + 1:
            raise SpecViolation("need one segment more than breakpoints")
        if len(bps) and self.top_value <= bps[-1]:
            raise SpecViolation("top_value must exceed the last breakpoint")
        N = self.segments[0].generators.shape[1]
        sizes = [seg.family_size for seg in self.segments]
        if any(b > a for a, b in zip(sizes, sizes[1:])):
            raise SpecViolation("family sizes must not grow with ups")
        for seg in self.segments:
            if seg.generators.shape != (seg.family_size, N):
                raise SpecViolation("generator block shape mismatch")
            if seg.tau_base.shape != (N,) or seg.tau_dir.shape != (N,):
                raise SpecViolation("target path terms must have length N")
            if np.any(seg.tau_dir < 0):
                raise SpecViolation("target path must not decrease in ups")
        for d, b in enumerate(bps):
            lo_tau = self.segments[d].tau(float(b))
            hi_tau = self.segments[d + 1].tau(float(b))
            if np.any(hi_tau < lo_tau - 1e-9):
                raise SpecViolation("target path must not drop across a breakpoint")

    @property
    def dim(self) -> int:
        return self.segments[0].generators.shape[1]

    def segment_at(self, v: float) -> TargetSegment:
        return self.segments[int(np.searchsorted(self.breakpoints, v, side="left"))]


def from_family(fam: AcceptanceFamily) -> TargetSpec:
    """Fold the calibrated hulls and the per-level shifts into a TargetSpec."""
    s = fam.sample
    # distinct values ascending; kappa of each block is its last index
    ends = np.flatnonzero(np.diff(s.values) != 0.0) + 1
    ends = np.concatenate([ends, [s.size]])[::-1]
    distinct = s.values[ends - 1]
    segments = []
    for j in ends:
        c = float(fam.shifts[j - 1])
        segments.append(TargetSegment(
            family_size=int(j),
            generators=s.theta_tilde[:j] + c,
            tau_base=np.full(s.dim, -c),
            tau_dir=np.full(s.dim, 1.0 / s.lipschitz)))
    return TargetSpec(breakpoints=distinct[:-1], top_value=float(distinct[-1]),
                      segments=tuple(segments))


def eval_constructed_valuation(spec: TargetSpec, x: np.ndarray,
                               tol: float = _BISECT_TOL) -> float:
    """Evaluate a TargetSpec at x by bisection, using only its own data."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise SpecViolation(f"point has shape {x.shape}, expected ({spec.dim},)")

    def pred(v: float) -> bool:
        seg = spec.segment_at(v)
        return _min_envelope_coord(seg.generators, x - seg.tau(v)) <= 1e-9

    hi = spec.top_value
    # walk down into the bottom hull; its target recedes as ups drops,
    # so the predicate turns true once ups is low enough
    lo = float(spec.breakpoints[0]) if len(spec.breakpoints) else hi
    step = 1.0 + abs(hi - lo)
    for _ in range(80):
        if pred(lo):
            break
        lo -= step
        step *= 2.0
    else:
        raise SpecViolation("no feasible level found above the lower bracket")
    return _bisect(pred, lo, hi, tol)
