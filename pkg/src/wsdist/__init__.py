"""Intensity-aware distance maps and boundary loss for point supervision."""

from .grid import (
    ConnectivityKind,
    DistanceMap,
    GridShape,
    LabelVolume,
    ProbabilityVolume,
    ScalarVolume,
    SignedDistanceMap,
    boundary_of,
    neighbors,
)
from .loss import (
    LossConfig,
    boundary_loss,
    boundary_loss_grad,
    combined_objective,
    partial_cross_entropy,
)
from .metrics import MetricReport, dice, evaluate, hd95
from .transforms import (
    DistanceKind,
    RasterConfig,
    TransformConfig,
    distance_map_exact,
    distance_map_raster,
    make_signed_map,
    rescale_intensities,
    signed_maps_2d_stack,
    signed_maps_for_all_classes,
    step_cost,
)
from .weaklabels import (
    AbsentClassPolicy,
    PointAnnotationConfig,
    absent_class_map,
    generate_points,
)

__version__ = "0.1.0"

__all__ = [
    "AbsentClassPolicy",
    "ConnectivityKind",
    "DistanceKind",
    "DistanceMap",
    "GridShape",
    "LabelVolume",
    "LossConfig",
    "MetricReport",
    "PointAnnotationConfig",
    "ProbabilityVolume",
    "RasterConfig",
    "ScalarVolume",
    "SignedDistanceMap",
    "TransformConfig",
    "absent_class_map",
    "boundary_loss",
    "boundary_loss_grad",
    "boundary_of",
    "combined_objective",
    "dice",
    "distance_map_exact",
    "distance_map_raster",
    "evaluate",
    "generate_points",
    "hd95",
    "make_signed_map",
    "neighbors",
    "partial_cross_entropy",
    "rescale_intensities",
    "signed_maps_2d_stack",
    "signed_maps_for_all_classes",
    "step_cost",
]
