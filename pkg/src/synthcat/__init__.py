"""Synthetic categorical datasets with a known partition of subjects.

Generate n x P tables of categorical level codes where every subject
belongs to a predetermined cluster, variables are independent within
clusters, and the marginal dependence between chosen groups of variables
hits user-specified covariance or correlation targets exactly in
expectation.  Companion tools compute the exact moment matrices a spec
implies, empirical association measures for checking generated (or any)
data, and an end-to-end pipeline with reproducible artifacts.
"""

__version__ = "0.1.0"

from .association import (
    AssociationMatrix,
    ContingencyTable,
    association_matrix,
    chi_square,
    concentration_coefficient,
    cramers_v,
    crosstab,
    pearson_matrix,
    stuart_kendall_tau_c,
)
from .calibration import (
    CalibrationResult,
    GroupCalibration,
    calibrate_binary_correlation,
    calibrate_binary_covariance,
    calibrate_group,
    calibrate_snp_correlation,
    calibrate_snp_covariance,
    hardy_weinberg_moments,
    hardy_weinberg_probs,
)
from .generator import (
    BuiltSpec,
    GeneratorSpec,
    allocate_subjects,
    bind_pattern,
    build_spec,
    generate,
)
from .model import (
    ClusterSpec,
    Dataset,
    DependenceTarget,
    GroupStructure,
    InfeasibleTargetError,
    KindError,
    ProbabilityVector,
    ProfileMatrix,
    RunConfig,
    SpecError,
    ValidationReport,
    VariableDomain,
    dump_config,
    load_config,
    validate_spec,
)
from .moments import (
    MomentMatrices,
    brute_force_moments,
    cluster_means,
    moment_matrices,
)
from .patterns import PatternMatrix, balanced_pattern, grouped_pattern, pad_groups
from .report import (
    ComparisonReport,
    GroupSummary,
    RunResult,
    build_run,
    compare_matrices,
    run_from_manifest,
    run_pipeline,
    summarize_groups,
    within_group_averages,
)
from .sampling import inverse_normal_cdf, normal_cdf

__all__ = [
    "__version__",
    "AssociationMatrix",
    "BuiltSpec",
    "CalibrationResult",
    "ClusterSpec",
    "ComparisonReport",
    "ContingencyTable",
    "Dataset",
    "DependenceTarget",
    "GeneratorSpec",
    "GroupCalibration",
    "GroupStructure",
    "GroupSummary",
    "InfeasibleTargetError",
    "KindError",
    "MomentMatrices",
    "PatternMatrix",
    "ProbabilityVector",
    "ProfileMatrix",
    "RunConfig",
    "RunResult",
    "SpecError",
    "ValidationReport",
    "VariableDomain",
    "allocate_subjects",
    "association_matrix",
    "balanced_pattern",
    "bind_pattern",
    "brute_force_moments",
    "build_run",
    "build_spec",
    "calibrate_binary_correlation",
    "calibrate_binary_covariance",
    "calibrate_group",
    "calibrate_snp_correlation",
    "calibrate_snp_covariance",
    "chi_square",
    "cluster_means",
    "compare_matrices",
    "concentration_coefficient",
    "cramers_v",
    "crosstab",
    "dump_config",
    "generate",
    "grouped_pattern",
    "hardy_weinberg_moments",
    "hardy_weinberg_probs",
    "inverse_normal_cdf",
    "load_config",
    "moment_matrices",
    "normal_cdf",
    "pad_groups",
    "pearson_matrix",
    "run_from_manifest",
    "run_pipeline",
    "stuart_kendall_tau_c",
    "summarize_groups",
    "validate_spec",
    "within_group_averages",
]
