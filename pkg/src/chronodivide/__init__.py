"""Chrono-divide detection: stylometric change-of-authorship analysis for
ordered corpora, built on content-independent features, linear SVM-RFE with
pseudo-aggregated relative-frequency ranking, and ordered-series analysis."""

from .analysis import (
    DecisionSeries,
    DivideReport,
    TrendReport,
    detect_divide,
    detect_trend,
    group_distances,
)
from .corpus import (
    Document,
    Sample,
    SegmentationPolicy,
    load_corpus,
    segment_samples,
    split_sentences,
)
from .features import (
    FeatureMatrix,
    FeatureSpec,
    Normalizer,
    apply_normalizer,
    build_feature_matrix,
    build_vocabulary,
    count_word_occurrences,
    extract_features,
    fit_normalizer,
    load_lexicon,
)
from .model import (
    LinearModel,
    TrainConfig,
    accuracy,
    decision_values,
    rfe_rank,
    train_linear_svm,
)
from .pipeline import RunConfig, RunResult, load_run_config, run_pipeline
from .selection import (
    RankedFeatureList,
    RepeatModel,
    SelectionConfig,
    aggregate_rf,
    run_repeat,
    select_d_star,
    train_final,
    weight_g,
    weight_h,
)
from .synthetic import SyntheticSpec, generate_synthetic, make_shifted_distributions

__version__ = "0.1.0"

__all__ = [
    "DecisionSeries",
    "DivideReport",
    "TrendReport",
    "detect_divide",
    "detect_trend",
    "group_distances",
    "Document",
    "Sample",
    "SegmentationPolicy",
    "load_corpus",
    "segment_samples",
    "split_sentences",
    "FeatureMatrix",
    "FeatureSpec",
    "Normalizer",
    "apply_normalizer",
    "build_feature_matrix",
    "build_vocabulary",
    "count_word_occurrences",
    "extract_features",
    "fit_normalizer",
    "load_lexicon",
    "LinearModel",
    "TrainConfig",
    "accuracy",
    "decision_values",
    "rfe_rank",
    "train_linear_svm",
    "RunConfig",
    "RunResult",
    "load_run_config",
    "run_pipeline",
    "RankedFeatureList",
    "RepeatModel",
    "SelectionConfig",
    "aggregate_rf",
    "run_repeat",
    "select_d_star",
    "train_final",
    "weight_g",
    "weight_h",
    "SyntheticSpec",
    "generate_synthetic",
    "make_shifted_distributions",
    "__version__",
]
