"""Dense label-map encoding and decoding for arbitrary-shaped text instances.

The package converts polygon text annotations into four aligned label maps
(text region, text kernel, pixel offsets, pixel orientations), reconstructs
instance polygons from such maps, provides the matching segmentation and
regression losses as plain array math, and evaluates detections against
ground truth with IoU-threshold and TR/TP protocols.
"""

from .decoder import (
    DecodedInstance,
    DecoderConfig,
    ScoreMaps,
    connected_components,
    decode,
    decode_msr,
    group_border_pixels,
    shift_points,
)
from .encoder import (
    BACKGROUND_ID,
    IGNORE_ID,
    EncoderConfig,
    LabelMaps,
    TextAnnotation,
    encode,
    encode_msr,
)
from .errors import (
    AnnotationFormatError,
    ConfigError,
    DegenerateGeometryError,
    ParameterError,
    ShapeError,
    TextMapsError,
)
from .estimators import InstanceDecoder, LabelMapEncoder
from .evaluation import EvalConfig, EvalReport, match_deteval, match_iou, sweep
from .geometry import (
    MultiPolygon,
    Polygon,
    alpha_shape,
    expand_offset,
    nearest_boundary_point,
    offset_polygon,
    polygon_area,
    polygon_iou,
    polygon_perimeter,
    rasterize,
    shrink_offset,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    PredictionBatch,
    dice_loss,
    finite_difference,
    offset_loss,
    ohem_select,
    orientation_loss,
    total_loss,
)

__version__ = "0.1.0"

__all__ = [
    "BACKGROUND_ID",
    "IGNORE_ID",
    "AnnotationFormatError",
    "ConfigError",
    "DecodedInstance",
    "DecoderConfig",
    "DegenerateGeometryError",
    "EncoderConfig",
    "EvalConfig",
    "EvalReport",
    "InstanceDecoder",
    "LabelMapEncoder",
    "LabelMaps",
    "LossBreakdown",
    "LossWeights",
    "MultiPolygon",
    "ParameterError",
    "Polygon",
    "PredictionBatch",
    "ScoreMaps",
    "ShapeError",
    "TextAnnotation",
    "TextMapsError",
    "alpha_shape",
    "connected_components",
    "decode",
    "decode_msr",
    "dice_loss",
    "encode",
    "encode_msr",
    "expand_offset",
    "finite_difference",
    "group_border_pixels",
    "match_deteval",
    "match_iou",
    "nearest_boundary_point",
    "offset_loss",
    "offset_polygon",
    "ohem_select",
    "orientation_loss",
    "polygon_area",
    "polygon_iou",
    "polygon_perimeter",
    "rasterize",
    "shift_points",
    "shrink_offset",
    "sweep",
    "total_loss",
]
