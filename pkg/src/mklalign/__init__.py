"""Multiple kernel learning with centered alignment.

Two-stage learners pick a convex (or L2-bounded) combination of base
kernels by maximizing its centered alignment with the labels, then hand the
learned kernel to a standard SVM or ridge predictor. The package also ships
one-stage alignment-regularized ridge, interleaved margin/ridge baselines,
a Monte-Carlo bench for the concentration and stability guarantees, and an
HTTP service plus CLI around all of it.
"""

from .alignment import (
    AlignmentReport,
    AlignmentSystem,
    FiniteDistribution,
    PopulationAlignment,
    alignment_report,
    alignment_system,
    centered_alignment,
    population_alignment,
    population_report,
    population_uncentered_alignment,
    uncentered_alignment,
    unnormalized_alignment,
)
from .data import (
    BankConfig,
    CsvSource,
    DatasetConfig,
    ExplicitFamily,
    GaussianGrid,
    LibsvmSource,
    Preprocessing,
    RankOneFamily,
    SyntheticSource,
    build_bank,
    bundled_dataset_path,
    load_dataset,
)
from .errors import (
    DataError,
    DegenerateKernelError,
    DimensionError,
    MklAlignError,
    NonConvergedError,
    NoSignalError,
    SingularSystemError,
)
from .experiments import (
    CorrelationReport,
    CurvePoint,
    ExperimentConfig,
    ExperimentRun,
    FoldResult,
    KernelCorrelationRow,
    TtestDecision,
    alignment_curve,
    correlation_report,
    dataset_id,
    paired_ttest,
    run_cv,
)
from .kernels import (
    GramMatrix,
    KernelBank,
    KernelSpec,
    Sample,
    center,
    centered_entries,
    combine,
    frobenius_norm,
    frobenius_product,
    gaussian,
    gram,
    gram_cross,
    label_kernel,
    linear,
    matrix_of,
    rank_one,
    trace_normalize,
)
from .learners import (
    KrrModel,
    LearnedKernelFit,
    OneStageConfig,
    SvmModel,
    classify,
    krr_fit,
    l1svm_learn,
    l2krr_learn,
    onestage_learn,
    predict,
    svm_fit,
)
from .theory import (
    ConcentrationConfig,
    GenBoundInputs,
    bias_bound,
    concentration_bound,
    concentration_trial,
    delta_mu_identity,
    g_star_diagnostics,
    generalization_bound_value,
    perturbation_bound,
    perturbation_check,
    predictor_diagnostics,
    qp_stability_check,
    qp_stability_trials,
)
from .weights import (
    MixtureWeights,
    NnqpProblem,
    align_weights,
    alignf_weights,
    argmax_weights,
    kkt_residual,
    linear_combination_weights,
    lq_weights,
    nnqp_solve,
    rho0_of_solution,
    unif_weights,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentReport",
    "AlignmentSystem",
    "BankConfig",
    "ConcentrationConfig",
    "CorrelationReport",
    "CsvSource",
    "CurvePoint",
    "DataError",
    "DatasetConfig",
    "DegenerateKernelError",
    "DimensionError",
    "ExperimentConfig",
    "ExperimentRun",
    "ExplicitFamily",
    "FiniteDistribution",
    "FoldResult",
    "KernelCorrelationRow",
    "GaussianGrid",
    "GenBoundInputs",
    "GramMatrix",
    "KernelBank",
    "KernelSpec",
    "KrrModel",
    "LearnedKernelFit",
    "LibsvmSource",
    "MixtureWeights",
    "MklAlignError",
    "NnqpProblem",
    "NoSignalError",
    "NonConvergedError",
    "OneStageConfig",
    "PopulationAlignment",
    "Preprocessing",
    "RankOneFamily",
    "Sample",
    "SingularSystemError",
    "SvmModel",
    "SyntheticSource",
    "TtestDecision",
    "alignf_weights",
    "align_weights",
    "alignment_curve",
    "alignment_report",
    "alignment_system",
    "argmax_weights",
    "bias_bound",
    "build_bank",
    "bundled_dataset_path",
    "center",
    "centered_alignment",
    "centered_entries",
    "classify",
    "combine",
    "concentration_bound",
    "concentration_trial",
    "correlation_report",
    "dataset_id",
    "delta_mu_identity",
    "frobenius_norm",
    "frobenius_product",
    "g_star_diagnostics",
    "gaussian",
    "generalization_bound_value",
    "gram",
    "gram_cross",
    "kkt_residual",
    "krr_fit",
    "l1svm_learn",
    "l2krr_learn",
    "label_kernel",
    "linear",
    "linear_combination_weights",
    "load_dataset",
    "lq_weights",
    "matrix_of",
    "nnqp_solve",
    "onestage_learn",
    "paired_ttest",
    "perturbation_bound",
    "perturbation_check",
    "population_alignment",
    "population_report",
    "population_uncentered_alignment",
    "predict",
    "predictor_diagnostics",
    "qp_stability_check",
    "qp_stability_trials",
    "rank_one",
    "rho0_of_solution",
    "run_cv",
    "svm_fit",
    "trace_normalize",
    "uncentered_alignment",
    "unif_weights",
    "unnormalized_alignment",
    "__version__",
]
