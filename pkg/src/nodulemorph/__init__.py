"""Morphology features, from-scratch classifiers, and ROI preprocessing
for binary thyroid-nodule masks."""

__version__ = "0.1.0"

from .config import RunConfig, build_config, load_config, read_config_file
from .crossval import (
    FoldAssignment,
    Report,
    feature_matrix,
    run_cv,
    stratified_kfold,
    write_report_csv,
    write_report_json,
)
from .errors import (
    ConfigError,
    DivergenceError,
    EmptyMaskError,
    EvaluationError,
    FitError,
    FormatError,
    LabelError,
    NoduleMorphError,
    ResampleError,
    ShapeMismatchError,
    StratificationError,
    TrainingError,
)
from .forest import ForestConfig, RandomForest
from .maskio import (
    BinaryMask,
    ClassLabel,
    DatasetCatalog,
    GrayImage,
    load_catalog,
    load_image,
    load_mask,
    map_tirads,
    save_mask,
)
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    SegMetrics,
    class_metrics,
    dice_iou,
    f1_score,
    seg_eval_batch,
)
from .mlp import Mlp, MlpConfig
from .morphology import (
    FEATURE_NAMES,
    FeatureVector,
    connected_components,
    convex_hull,
    convex_hull_area,
    extract_features,
    fill_holes,
    hu_moments,
    largest_component,
    moments,
    perimeter,
    trace_contour,
    write_features_csv,
)
from .preprocess import ScalerParams, apply_scaler, fit_scaler, smote_balance, smote_sample
from .rng import substream, substream_seed
from .roi import (
    BoundingBox,
    RoiTensor,
    bounding_box,
    crop_resize,
    expand_and_clamp,
    export_tensor,
    extract_roi,
    load_tensor,
    normalize,
)
from .synthetic import make_cohort, write_cohort

__all__ = [
    "__version__",
    "BinaryMask",
    "BoundingBox",
    "ClassLabel",
    "ClassMetrics",
    "ConfigError",
    "ConfusionMatrix",
    "DatasetCatalog",
    "DivergenceError",
    "EmptyMaskError",
    "EvaluationError",
    "FEATURE_NAMES",
    "FeatureVector",
    "FitError",
    "FoldAssignment",
    "ForestConfig",
    "FormatError",
    "GrayImage",
    "LabelError",
    "Mlp",
    "MlpConfig",
    "NoduleMorphError",
    "RandomForest",
    "Report",
    "ResampleError",
    "RoiTensor",
    "RunConfig",
    "ScalerParams",
    "SegMetrics",
    "ShapeMismatchError",
    "StratificationError",
    "TrainingError",
    "apply_scaler",
    "bounding_box",
    "build_config",
    "class_metrics",
    "connected_components",
    "convex_hull",
    "convex_hull_area",
    "crop_resize",
    "dice_iou",
    "expand_and_clamp",
    "export_tensor",
    "extract_features",
    "extract_roi",
    "f1_score",
    "feature_matrix",
    "fill_holes",
    "fit_scaler",
    "hu_moments",
    "largest_component",
    "load_catalog",
    "load_config",
    "load_image",
    "load_mask",
    "load_tensor",
    "make_cohort",
    "map_tirads",
    "moments",
    "normalize",
    "perimeter",
    "read_config_file",
    "run_cv",
    "save_mask",
    "seg_eval_batch",
    "smote_balance",
    "smote_sample",
    "stratified_kfold",
    "substream",
    "substream_seed",
    "trace_contour",
    "write_cohort",
    "write_features_csv",
    "write_report_csv",
    "write_report_json",
]
