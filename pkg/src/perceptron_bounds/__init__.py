"""Online perceptron runs with empirically certified mistake bounds.

The package trains single-pass (kernel) perceptrons with fully replayable
traces, evaluates the classical separable mistake bound and a family of
L1/L2-norm loss-based bounds against the actual mistake count, converts online
runs into batch risk bounds, and ships seeded generators plus CSV/sparse file
I/O and a CLI (``pbounds``) for reproducible experiments.
"""

from .bounds import (
    BOUND_NAMES,
    BoundForm,
    BoundReport,
    L1_BOUND_NAMES,
    L2_BOUND_NAMES,
    NormComparison,
    Regime,
    compare_norms,
    l1_bound,
    l2_bound,
    novikoff_bound,
    optimize_bound,
)
from .data import (
    FileFormat,
    GeneratedData,
    GeneratorKind,
    GeneratorSpec,
    generate,
    load,
    save,
)
from .engine import (
    PerceptronConfig,
    RoundRecord,
    RunTrace,
    UpdateIdentityStats,
    UpdateRule,
    predicted_label,
    run_primal,
    update_identity_stats,
)
from .errors import (
    DataParseError,
    GenerationError,
    InfeasibleWitnessError,
    TracePreconditionError,
)
from .estimators import KernelOnlinePerceptron, OnlinePerceptron
from .kernels import (
    DualHypothesis,
    KernelFamily,
    KernelSpec,
    KernelTrace,
    run_kernel,
)
from .losses import (
    ABS_TOL,
    FEASIBILITY_SLACK,
    REL_TOL,
    AdmissibilityReport,
    AdmissibleLoss,
    LossVector,
    check_admissibility,
    loss_vector,
    make_hinge,
    make_huber,
    make_squared_hinge,
    witness_margins,
)
from .online_to_batch import (
    CoverageResult,
    GeneralizationKind,
    GeneralizationReport,
    SelectionResult,
    TrialRecord,
    conversion_rhs,
    coverage_experiment,
    generalization_bound_rhs,
    penalized_argmin,
    penalty_terms,
    select_penalized,
    zero_one_loss,
)
from .report import ReportDocument, dataset_digest
from .stream import LabeledExample, Stream

__version__ = "0.1.0"

__all__ = [
    "ABS_TOL",
    "AdmissibilityReport",
    "AdmissibleLoss",
    "BOUND_NAMES",
    "BoundForm",
    "BoundReport",
    "CoverageResult",
    "DataParseError",
    "DualHypothesis",
    "FEASIBILITY_SLACK",
    "FileFormat",
    "GeneralizationKind",
    "GeneralizationReport",
    "GeneratedData",
    "GenerationError",
    "GeneratorKind",
    "GeneratorSpec",
    "InfeasibleWitnessError",
    "KernelFamily",
    "KernelOnlinePerceptron",
    "KernelSpec",
    "KernelTrace",
    "L1_BOUND_NAMES",
    "L2_BOUND_NAMES",
    "LabeledExample",
    "LossVector",
    "NormComparison",
    "OnlinePerceptron",
    "PerceptronConfig",
    "REL_TOL",
    "Regime",
    "ReportDocument",
    "RoundRecord",
    "RunTrace",
    "SelectionResult",
    "Stream",
    "TracePreconditionError",
    "TrialRecord",
    "UpdateIdentityStats",
    "UpdateRule",
    "check_admissibility",
    "compare_norms",
    "conversion_rhs",
    "coverage_experiment",
    "dataset_digest",
    "generalization_bound_rhs",
    "generate",
    "l1_bound",
    "l2_bound",
    "load",
    "loss_vector",
    "make_hinge",
    "make_huber",
    "make_squared_hinge",
    "novikoff_bound",
    "optimize_bound",
    "penalized_argmin",
    "penalty_terms",
    "predicted_label",
    "run_kernel",
    "run_primal",
    "save",
    "select_penalized",
    "update_identity_stats",
    "witness_margins",
    "zero_one_loss",
]
