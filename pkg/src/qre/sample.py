"""Finite valuation samples and their level structure.

A sample is a set of observed points theta_1..theta_J in R^N with values
vhat(theta_j), a Lipschitz constant L for the sup norm, and a flag saying
whether the unknown valuation is taken to be componentwise non-decreasing.
Sorting by decreasing value fixes the level structure everything else
works with: D_j denotes the top j points, and kappa(v) is the largest j
whose value still reaches v (ties therefore resolve to the largest
index).  Each sorted point also carries its translate

    theta_tilde_j = theta_j - (vhat(theta_j) / L) * 1,

the generator used by level set and target set constructions.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, LevelAboveMax, NonFiniteInput

__all__ = [
    "RawSample",
    "SortedSample",
    "build_sorted_sample",
    "level_index",
    "load_sample_json",
    "save_sample_json",
    "load_sample_csv",
]


@dataclass
class RawSample:
    """Unsorted observations: points (J, N), values (J,), L, monotone flag."""

    points: np.ndarray
    values: np.ndarray
    lipschitz: float
    monotone: bool = False

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.points.shape[0] == 0:
            raise EmptySample("sample has no points")
        if self.values.shape[0] != self.points.shape[0]:
            raise NonFiniteInput(
                f"{self.points.shape[0]} points but {self.values.shape[0]} values")
        if not np.all(np.isfinite(self.points)):
            raise NonFiniteInput("points contain a non-finite entry")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInput("values contain a non-finite entry")
        self.lipschitz = float(self.lipschitz)
        if not np.isfinite(self.lipschitz) or self.lipschitz <= 0:
            raise NonFiniteInput(f"lipschitz must be finite and > 0, got {self.lipschitz}")
        self.monotone = bool(self.monotone)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class SortedSample:
    """A RawSample sorted by decreasing value, duplicates removed.

    `order` maps sorted position j (0-based) to the index of that
    observation in the raw input.  `theta_tilde` caches the translated
    generators and `v_max` the largest value.
    """

    points: np.ndarray
    values: np.ndarray
    lipschitz: float
    monotone: bool
    order: np.ndarray
    theta_tilde: np.ndarray = field(init=False)
    v_max: float = field(init=False)

    def __post_init__(self):
        self.theta_tilde = self.points - (self.values / self.lipschitz)[:, None]
        self.v_max = float(self.values[0])

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def top(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Points and values of D_j, the j highest-valued observations."""
        if not 1 <= j <= self.size:
            raise LevelAboveMax(f"level index {j} outside 1..{self.size}")
        return self.points[:j], self.values[:j]


def build_sorted_sample(raw: RawSample) -> SortedSample:
    """Stable sort by decreasing value; exact duplicate rows are dropped.

    A duplicate means an identical (point, value) pair.  Dropping one is
    harmless for every construction downstream, but it is reported with
    a warning because it usually signals an upstream data problem.
    """
    pts, vals = raw.points, raw.values
    _, first = np.unique(np.hstack([pts, vals[:, None]]), axis=0, return_index=True)
    if first.size < raw.size:
        warnings.warn(
            f"dropped {raw.size - first.size} duplicate sample point(s)",
            stacklevel=2)
        keep = np.zeros(raw.size, dtype=bool)
        keep[first] = True
        idx = np.flatnonzero(keep)
    else:
        idx = np.arange(raw.size)
    order = idx[np.argsort(-vals[idx], kind="stable")]
    return SortedSample(points=pts[order].copy(), values=vals[order].copy(),
                        lipschitz=raw.lipschitz, monotone=raw.monotone,
                        order=order)


def level_index(s: SortedSample, v: float) -> int:
    """kappa(v): how many sorted points have value >= v.

    Equivalently the largest j with vhat(theta_j) >= v, so ties resolve
    to the largest index.  Raises LevelAboveMax above the best value.
    """
    v = float(v)
    if np.isnan(v):
        raise NonFiniteInput("level is NaN")
    if v > s.v_max:
        raise LevelAboveMax(f"level {v} exceeds the maximum sampled value {s.v_max}")
    # values are sorted descending; count entries >= v
    return int(np.searchsorted(-s.values, -v, side="right"))


def _raw_from_dict(obj: dict) -> RawSample:
    try:
        return RawSample(points=np.asarray(obj["points"], dtype=float),
                         values=np.asarray(obj["values"], dtype=float),
                         lipschitz=obj["lipschitz"],
                         monotone=bool(obj.get("monotone", False)))
    except KeyError as exc:
        raise NonFiniteInput(f"sample object missing key {exc}") from exc


def load_sample_json(path: str) -> RawSample:
    """Read {"points": [[..]], "values": [..], "lipschitz": L, "monotone": flag}."""
    with open(path, encoding="utf-8") as fh:
        return _raw_from_dict(json.load(fh))


def save_sample_json(raw: RawSample, path: str):
    obj = {"points": raw.points.tolist(), "values": raw.values.tolist(),
           "lipschitz": raw.lipschitz, "monotone": raw.monotone}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def load_sample_csv(path: str, lipschitz: float, monotone: bool = False) -> RawSample:
    """Read a CSV whose last column is the value, the rest coordinates.

    A header row is skipped when its cells do not parse as numbers.
    """
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for cells in csv.reader(fh):
            if not cells:
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                if rows:
                    raise NonFiniteInput(f"non-numeric row in {path}: {cells!r}")
                continue  # header
    if not rows:
        raise EmptySample(f"no data rows in {path}")
    arr = np.asarray(rows, dtype=float)
    if arr.shape[1] < 2:
        raise NonFiniteInput("CSV needs at least one coordinate column plus a value")
    return RawSample(points=arr[:, :-1], values=arr[:, -1],
                     lipschitz=lipschitz, monotone=monotone)
