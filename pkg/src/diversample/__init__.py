"""Diversity-preserving re-sampling for imbalanced binary classification.

The package couples classic re-sampling (ROS, RUS, SMOTE, and their
hybrids) with Solow-Polasky diversity maximization: instead of keeping
or generating instances at random, the diversity-based variants keep
the subset whose pairwise-similarity structure spans the most ground.
A small evaluation harness (PR-AUC, Wilcoxon signed-rank, repeated
paired experiments) and the SORT surgical-mortality case study sit on
top, all seeded and deterministic end to end.
"""

from .classifiers import (
    CartClassifier,
    ForestClassifier,
    KnnClassifier,
    LogisticModel,
    ModelSpec,
    fit_forest,
    fit_glm,
    fit_knn,
    fit_model,
    fit_tree,
    glm_export,
    glm_import,
    make_classifier,
    predict_scores,
)
from .data import (
    Dataset,
    Standardizer,
    apply_imbalance_level,
    generate_synthetic,
    load_csv,
    save_csv,
    standardize,
    stratified_split,
)
from .diversity import (
    DiversitySelector,
    KernelInverse,
    build_kernel,
    diversity_of_points,
    greedy_select,
    solow_polasky,
)
from .evaluation import (
    DatasetSpec,
    ExperimentConfig,
    ExperimentResult,
    PRCurve,
    config_from_json,
    config_to_json,
    confusion_at,
    evaluate_once,
    pr_auc,
    pr_curve,
    run_experiment,
    summarize,
    wilcoxon_signed_rank,
)
from .exceptions import DiversampleError
from .resampling import (
    METHODS,
    DiversityOverSampler,
    DiversityUnderSampler,
    HybridResampler,
    RandomOverSampler,
    RandomUnderSampler,
    ResampleOutcome,
    ResamplePlan,
    SmoteOverSampler,
    apply_plan,
    smote_generate,
)
from .sort import (
    SORT_COEFFICIENTS,
    SortPatient,
    cci_to_asa,
    encode_sort_features,
    fixed_sort_model,
    generate_sort_dataset,
    run_case_study,
    sort_score,
)

__version__ = "0.1.0"

__all__ = [
    "CartClassifier",
    "Dataset",
    "DatasetSpec",
    "DiversampleError",
    "DiversityOverSampler",
    "DiversitySelector",
    "DiversityUnderSampler",
    "ExperimentConfig",
    "ExperimentResult",
    "ForestClassifier",
    "HybridResampler",
    "KernelInverse",
    "KnnClassifier",
    "LogisticModel",
    "METHODS",
    "ModelSpec",
    "PRCurve",
    "RandomOverSampler",
    "RandomUnderSampler",
    "ResampleOutcome",
    "ResamplePlan",
    "SORT_COEFFICIENTS",
    "SmoteOverSampler",
    "SortPatient",
    "Standardizer",
    "apply_imbalance_level",
    "apply_plan",
    "build_kernel",
    "cci_to_asa",
    "config_from_json",
    "config_to_json",
    "confusion_at",
    "diversity_of_points",
    "encode_sort_features",
    "evaluate_once",
    "fit_forest",
    "fit_glm",
    "fit_knn",
    "fit_model",
    "fit_tree",
    "fixed_sort_model",
    "generate_sort_dataset",
    "generate_synthetic",
    "glm_export",
    "glm_import",
    "greedy_select",
    "load_csv",
    "make_classifier",
    "pr_auc",
    "pr_curve",
    "predict_scores",
    "run_case_study",
    "run_experiment",
    "save_csv",
    "smote_generate",
    "solow_polasky",
    "sort_score",
    "standardize",
    "stratified_split",
    "summarize",
    "wilcoxon_signed_rank",
]
