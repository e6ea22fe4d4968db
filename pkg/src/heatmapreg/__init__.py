"""Heatmap-regression toolkit for landmark localization.

Losses with analytic gradients (MSE, L1, wing, adaptive wing), weighted
loss maps, Gaussian heatmap encode/decode with quarter-pixel refinement,
boundary and coordinate channels, alignment metrics (NME/FR/CED/AUC/PCK),
and a small deterministic training harness over synthetic data.
"""

from .boundary import (
    FIVE_POINT_SCHEMA,
    BoundarySchema,
    BoundarySegment,
    boundary_channel,
    boundary_heatmap,
    merge_boundaries,
    rasterize_boundary,
)
from .coords import (
    CoordChannels,
    concat_channels,
    make_xy_radius,
    mask_boundary_coords,
)
from .exceptions import (
    DegenerateNormalizationError,
    DivergenceError,
    DomainError,
    HeatmapError,
    OutOfFrameError,
    SchemaError,
    ShapeError,
    UndefinedMetricError,
)
from .heatmaps import (
    DecodedLandmarks,
    GaussianSpec,
    HeatmapStack,
    LandmarkSet,
    PixelClass,
    Visibility,
    classify_pixels,
    decode_landmarks,
    render_heatmap,
)
from .losses import (
    LossKind,
    LossParams,
    LossSurface,
    awing_loss,
    batch_loss,
    evaluate_loss,
    influence,
    l1_loss,
    loss_grid,
    mse_loss,
    wing_loss,
)
from .metrics import (
    MetricsReport,
    NormalizationRule,
    ced_auc,
    compute_report,
    failure_rate,
    nme,
    pck,
)
from .net import TinyNet
from .synthetic import SyntheticSample, generate_dataset, generate_sample
from .trainer import (
    ABLATION_SPECS,
    EpochStats,
    TrainConfig,
    TrainResult,
    ablation_run,
    evaluate_landmarks,
    sweep_nme,
    train,
    train_and_evaluate,
)
from .weighting import (
    WeightMask,
    apply_weighted_loss,
    baseline_weight_map,
    build_mask,
    gray_dilate_3x3,
)

__version__ = "0.1.0"
