"""genmetrics: a generative-model evaluation toolkit.

Aliasing-safe image preparation, a binary feature interchange format,
Gaussian moment summaries, the Frechet-distance / classifier-score /
precision-recall-density-coverage metric suite, sample-efficiency curves,
and benchmark ranking.
"""

__version__ = "0.1.0"

from .pixelpipe import (  # noqa: E402
    FilterKind,
    PixelBuffer,
    Storage,
    backbone_prepare,
    decode_image,
    encode_png,
    normalize,
    quantize,
    resize,
)
from .featurestore import (  # noqa: E402
    BackboneSpec,
    FeatureSet,
    GaussianSummary,
    PosteriorSet,
    builtin_registry,
    lookup_backbone,
    read_features,
    summarize,
    write_features,
)
from .metrics import (  # noqa: E402
    ManifoldParams,
    PrdcResult,
    classifier_score,
    frechet_distance,
    intra_class_fd,
    knn_radii,
    prdc,
    top_k_accuracy,
)
from .analysis import (  # noqa: E402
    CurveMode,
    Direction,
    EfficiencyCurve,
    MetricReport,
    RankingTable,
    rank_models,
    real_to_real_curve,
    relative_fd_curve,
)

__all__ = [
    "__version__",
    "FilterKind", "PixelBuffer", "Storage", "backbone_prepare", "decode_image",
    "encode_png", "normalize", "quantize", "resize",
    "BackboneSpec", "FeatureSet", "GaussianSummary", "PosteriorSet",
    "builtin_registry", "lookup_backbone", "read_features", "summarize",
    "write_features",
    "ManifoldParams", "PrdcResult", "classifier_score", "frechet_distance",
    "intra_class_fd", "knn_radii", "prdc", "top_k_accuracy",
    "CurveMode", "Direction", "EfficiencyCurve", "MetricReport", "RankingTable",
    "rank_models", "real_to_real_curve", "relative_fd_curve",
]
