"""Worst-case quasiconcave envelopes of sampled valuations.

Build the tightest Lipschitz (optionally monotone) quasiconcave majorant
of a finite sample, work with its polyhedral upper level sets, and solve
robust maximization problems over it.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .aspirational import (AcceptanceFamily, TargetSegment, TargetSpec,
                           compute_acceptance, eval_constructed_valuation,
                           eval_mu, eval_target_representation, from_family)
from .bench import (CobbDouglas, GapRow, cobb_value, estimate_lipschitz,
                    fit_concave_regression, fit_piecewise_constant, l1_error,
                    run_gap_experiment, runtime_study, true_optimum)
from .envelope import (EnvelopeValue, KinkedMajorant, eval_psi, eval_psi_milp,
                       level_search)
from .errors import (BigMTooSmall, DegenerateCluster, EmptySample,
                     GroupCountTooLarge, InfeasibleDecisionSet, InternalError,
                     IterationLimit, LevelAboveMax, MalformedProgram, NodeLimit,
                     NonFiniteInput, NonMonotoneUnsupported, OutOfDomain,
                     QreError, ShapeMismatch, SpecViolation)
from .level_function import LevelFunctionResult, solve_level_function
from .levelsets import LevelSet, level_index, levelset_contains, levelset_hrep
from .perminv import (GroupShape, eval_psi_perm, perm_oracle, permute_groups,
                      solve_robust_perm)
from .sample import (RawSample, SortedSample, build_sorted_sample,
                     load_sample_csv, load_sample_json, save_sample_json)
from .solver import (Polyhedron, RobustProblem, SolveReport, load_problem_json,
                     solve_robust)

__all__ = [
    "__version__",
    "AcceptanceFamily", "TargetSegment", "TargetSpec", "compute_acceptance",
    "eval_constructed_valuation", "eval_mu", "eval_target_representation",
    "from_family",
    "CobbDouglas", "GapRow", "cobb_value", "estimate_lipschitz",
    "fit_concave_regression", "fit_piecewise_constant", "l1_error",
    "run_gap_experiment", "runtime_study", "true_optimum",
    "EnvelopeValue", "KinkedMajorant", "eval_psi", "eval_psi_milp",
    "level_search",
    "BigMTooSmall", "DegenerateCluster", "EmptySample", "GroupCountTooLarge",
    "InfeasibleDecisionSet", "InternalError", "IterationLimit", "LevelAboveMax",
    "MalformedProgram", "NodeLimit", "NonFiniteInput", "NonMonotoneUnsupported",
    "OutOfDomain", "QreError", "ShapeMismatch", "SpecViolation",
    "LevelFunctionResult", "solve_level_function",
    "LevelSet", "level_index", "levelset_contains", "levelset_hrep",
    "GroupShape", "eval_psi_perm", "perm_oracle", "permute_groups",
    "solve_robust_perm",
    "RawSample", "SortedSample", "build_sorted_sample", "load_sample_csv",
    "load_sample_json", "save_sample_json",
    "Polyhedron", "RobustProblem", "SolveReport", "load_problem_json",
    "solve_robust",
]
