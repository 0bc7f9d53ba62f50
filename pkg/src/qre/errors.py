"""Exception hierarchy shared across the package.

Everything raised deliberately derives from QreError so callers (and the
command line front end) can separate usage mistakes, infeasible models,
and solver breakdowns without string matching.
"""

from __future__ import annotations


class QreError(Exception):
    """Base class for all package errors."""


class MalformedProgram(QreError):
    """Dimension mismatch, NaN coefficient, or an otherwise unusable program."""


class IterationLimit(QreError):
    """Simplex pivot budget exhausted (cycling guard included)."""


class NodeLimit(QreError):
    """Branch-and-bound node budget exhausted."""


class EmptySample(QreError):
    """A sample with zero points."""


class NonFiniteInput(QreError):
    """NaN or infinity where a finite number is required."""


class LevelAboveMax(QreError):
    """Level index requested for a value above the largest sampled value."""


class BigMTooSmall(QreError):
    """Supplied big-M constant below the validity bound."""


class InternalError(QreError):
    """An invariant the solver relies on failed; indicates a bug."""


class NonMonotoneUnsupported(QreError):
    """Operation defined only for monotone samples."""


class InfeasibleDecisionSet(QreError):
    """The decision polyhedron is empty or unbounded."""


class ShapeMismatch(QreError):
    """Group structure does not tile the coordinate dimension."""


class GroupCountTooLarge(QreError):
    """Brute-force permutation oracle guarded to small group counts."""


class SpecViolation(QreError):
    """A structured input breaks one of its stated invariants."""


class OutOfDomain(QreError):
    """Point outside the benchmark function's domain box."""


class DegenerateCluster(QreError):
    """Too few points to pin down one affine fit per cluster."""
