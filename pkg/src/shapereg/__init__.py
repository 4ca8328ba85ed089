"""Shape-constrained polynomial regression via adaptive semi-infinite programming.

The package fits ridge-regularized anisotropic polynomial models under hard
shape constraints (bounds, monotonicity, convexity/concavity, rebound) that
hold at every point of the input domain, not just on a sample.  It ships the
adaptive certified solver, a grid-only baseline, a violation-audit and
cross-validation harness, a CLI, and an HTTP service for interactive
expert-in-the-loop model refinement.
"""

from .constraints import (
    ConstraintKind,
    ConstraintRow,
    ShapeConstraint,
    evaluate_constraint,
    linearize,
    load_constraints,
    save_constraints,
)
from .errors import (
    ConvergenceFailure,
    CsvFormatError,
    InfeasibleProblem,
    ModelFormatError,
    NotStrictlyFeasible,
    VersionMismatch,
)
from .evaluation import (
    CvReport,
    SolverSpec,
    ViolationReport,
    audit_violations,
    comparison_table,
    cross_validate,
    generalization_error,
)
from .features import FeatureMap, enumerate_multi_indices, eval_derivative, eval_features
from .global_opt import LowerLevelOptions, LowerLevelResult, maximize_constraint
from .model import TrainedModel, deserialize, load_model, save_model, serialize, slice_model
from .qp import QpInstance, QpSolution, make_instance, solve_qp, solve_ridge
from .sip import SipProblem, SolveOptions, SolveReport, solve_adaptive, solve_grid
from .toy import ToySpec, toy_constraints, toy_eval, toy_sample

__version__ = "0.1.0"

__all__ = [
    "ConstraintKind",
    "ConstraintRow",
    "ShapeConstraint",
    "evaluate_constraint",
    "linearize",
    "load_constraints",
    "save_constraints",
    "ConvergenceFailure",
    "CsvFormatError",
    "InfeasibleProblem",
    "ModelFormatError",
    "NotStrictlyFeasible",
    "VersionMismatch",
    "CvReport",
    "SolverSpec",
    "ViolationReport",
    "audit_violations",
    "comparison_table",
    "cross_validate",
    "generalization_error",
    "FeatureMap",
    "enumerate_multi_indices",
    "eval_derivative",
    "eval_features",
    "LowerLevelOptions",
    "LowerLevelResult",
    "maximize_constraint",
    "TrainedModel",
    "deserialize",
    "load_model",
    "save_model",
    "serialize",
    "slice_model",
    "QpInstance",
    "QpSolution",
    "make_instance",
    "solve_qp",
    "solve_ridge",
    "SipProblem",
    "SolveOptions",
    "SolveReport",
    "solve_adaptive",
    "solve_grid",
    "ToySpec",
    "toy_constraints",
    "toy_eval",
    "toy_sample",
]
