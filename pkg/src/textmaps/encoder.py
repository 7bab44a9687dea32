"""Turn polygon text annotations into dense training label maps.

Two expressions are supported:

* ``bidir`` — each instance contributes a shrunk kernel mask and an expanded
  region mask; pixels in the band between them (the text border) carry an
  offset vector to the nearest point of the original annotation boundary and
  a unit orientation vector toward the nearest kernel pixel of the same
  instance.
* ``msr`` — the comparison expression: the region is the raw annotation, the
  kernel is the shrunk annotation, offset vectors live on the kernel pixels
  and no orientations are produced.

When two instances overlap, the one with the smaller polygon area wins every
map at the contested pixels.  Annotations flagged as ignore ("do not care")
only mark their expanded footprint as excluded from training.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import ParameterError, ShapeError
from .geometry import (
    MultiPolygon,
    Polygon,
    expand_offset,
    nearest_boundary_points,
    offset_polygon,
    rasterize,
    shrink_offset,
)

BACKGROUND_ID = -1
IGNORE_ID = -2

# Smallest inward offset the empty-kernel fallback will try before giving up
# and flagging the annotation as ignore.
MIN_SHRINK_PX = 0.5

_MODE_ALIASES = {"bidir": "bidir", "bidirectional": "bidir", "msr": "msr"}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[str(mode).lower()]
    except KeyError:
        raise ParameterError(f"mode must be one of {sorted(set(_MODE_ALIASES))}, got {mode!r}")


@dataclass(frozen=True)
class TextAnnotation:
    """One annotated text instance: a polygon, an ignore flag and an id."""

    polygon: Polygon
    ignore: bool = False
    instance_id: int = 0


@dataclass(frozen=True)
class EncoderConfig:
    alpha: float = 0.6  # shrink ratio for the kernel
    beta: float = 1.2   # expansion ratio for the region
    mode: str = "bidir"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.beta < 1.0:
            raise ParameterError(f"beta must be >= 1, got {self.beta}")
        object.__setattr__(self, "mode", normalize_mode(self.mode))


@dataclass
class LabelMaps:
    """The aligned dense label maps for one image.

    ``text_region`` / ``text_kernel`` / ``train_mask`` are (H, W) bool,
    ``offset`` / ``orientation`` are (H, W, 2) float32 (x component first),
    ``instance_id`` is (H, W) int32 with -1 background and -2 ignore.
    ``train_mask`` is True where a pixel may contribute to a loss.
    """

    text_region: np.ndarray
    text_kernel: np.ndarray
    offset: np.ndarray
    orientation: np.ndarray
    instance_id: np.ndarray
    train_mask: np.ndarray
    mode: str = "bidir"

    def __post_init__(self):
        shape = self.text_region.shape
        for name in ("text_kernel", "instance_id", "train_mask"):
            if getattr(self, name).shape != shape:
                raise ShapeError(f"{name} shape {getattr(self, name).shape} != {shape}")
        for name in ("offset", "orientation"):
            if getattr(self, name).shape != shape + (2,):
                raise ShapeError(f"{name} shape {getattr(self, name).shape} != {shape + (2,)}")
        self.mode = normalize_mode(self.mode)

    @property
    def height(self) -> int:
        return self.text_region.shape[0]

    @property
    def width(self) -> int:
        return self.text_region.shape[1]

    @property
    def border_mask(self) -> np.ndarray:
        """Region minus kernel: the text border band."""
        return self.text_region & ~self.text_kernel

    @property
    def regression_mask(self) -> np.ndarray:
        """Pixels whose offset (and orientation) labels are defined."""
        if self.mode == "msr":
            return self.text_kernel.copy()
        return self.border_mask


def _empty_maps(width: int, height: int, mode: str) -> LabelMaps:
    return LabelMaps(
        text_region=np.zeros((height, width), dtype=bool),
        text_kernel=np.zeros((height, width), dtype=bool),
        offset=np.zeros((height, width, 2), dtype=np.float32),
        orientation=np.zeros((height, width, 2), dtype=np.float32),
        instance_id=np.full((height, width), BACKGROUND_ID, dtype=np.int32),
        train_mask=np.ones((height, width), dtype=bool),
        mode=mode,
    )


def _pixel_centers(mask: np.ndarray) -> np.ndarray:
    ii, jj = np.nonzero(mask)
    return np.stack([jj + 0.5, ii + 0.5], axis=1)


def _shrunk_kernel(polygon: Polygon, alpha: float, width: int, height: int):
    """Kernel geometry and raster, halving the offset while it rasterizes empty.

    Returns (mask, ok); ok is False when no non-empty kernel could be produced
    and the annotation should be treated as ignore.
    """
    d = shrink_offset(polygon, alpha)
    while True:
        geom = offset_polygon(polygon, -d)
        mask = rasterize(geom, width, height) if not geom.is_empty else None
        if mask is not None and mask.any():
            return mask, True
        if d < MIN_SHRINK_PX:
            return None, False
        d *= 0.5


def _validate_annotations(annotations, width, height):
    if width <= 0 or height <= 0:
        raise ParameterError(f"image dimensions must be positive, got {width}x{height}")
    seen = set()
    for ann in annotations:
        if ann.instance_id < 0:
            raise ParameterError(f"instance id must be >= 0, got {ann.instance_id}")
        if ann.instance_id in seen:
            raise ParameterError(f"duplicate instance id {ann.instance_id}")
        seen.add(ann.instance_id)


def _paint_order(annotations):
    """Ignores first, then valid instances by descending area (smaller wins)."""
    ignores = sorted((a for a in annotations if a.ignore), key=lambda a: a.instance_id)
    valids = sorted(
        (a for a in annotations if not a.ignore),
        key=lambda a: (-a.polygon.area, a.instance_id),
    )
    return ignores, valids


def _paint_ignore(maps: LabelMaps, region_mask: np.ndarray):
    maps.train_mask[region_mask] = False
    maps.instance_id[region_mask] = IGNORE_ID


def _paint_instance(maps, ann, region_mask, kernel_mask, offsets, orientations):
    claim = region_mask
    maps.text_region[claim] = True
    maps.text_kernel[claim] = kernel_mask[claim]
    maps.offset[claim] = offsets[claim]
    maps.orientation[claim] = orientations[claim]
    maps.instance_id[claim] = ann.instance_id
    maps.train_mask[claim] = True


def _boundary_offsets(polygon, mask, height, width):
    """Offset field over `mask` pixels: nearest original-boundary point - centre."""
    out = np.zeros((height, width, 2), dtype=np.float32)
    if not mask.any():
        return out
    centers = _pixel_centers(mask)
    nearest, _ = nearest_boundary_points(polygon, centers)
    out[mask] = (nearest - centers).astype(np.float32)
    return out


def _kernel_orientations(kernel_mask, border_mask, height, width):
    """Unit vectors from border pixels toward their nearest kernel pixel."""
    out = np.zeros((height, width, 2), dtype=np.float32)
    if not border_mask.any() or not kernel_mask.any():
        return out
    dist, (near_i, near_j) = distance_transform_edt(~kernel_mask, return_indices=True)
    ii, jj = np.nonzero(border_mask)
    dx = (near_j[ii, jj] - jj).astype(np.float64)
    dy = (near_i[ii, jj] - ii).astype(np.float64)
    norm = np.hypot(dx, dy)
    norm[norm == 0.0] = 1.0
    out[ii, jj, 0] = (dx / norm).astype(np.float32)
    out[ii, jj, 1] = (dy / norm).astype(np.float32)
    return out


def encode(annotations, width: int, height: int, config: EncoderConfig | None = None) -> LabelMaps:
    """Encode annotations into label maps under ``config.mode``.

    Pure function: identical inputs produce bit-identical maps.  Instances
    whose kernel cannot be rasterized even after the shrink fallback are
    demoted to ignore.
    """
    config = config or EncoderConfig()
    if config.mode == "msr":
        return encode_msr(annotations, width, height, config)
    _validate_annotations(annotations, width, height)
    maps = _empty_maps(width, height, "bidir")
    ignores, valids = _paint_order(annotations)

    for ann in ignores:
        d_e = expand_offset(ann.polygon, config.beta)
        _paint_ignore(maps, rasterize(offset_polygon(ann.polygon, +d_e), width, height))

    for ann in valids:
        kernel_mask, ok = _shrunk_kernel(ann.polygon, config.alpha, width, height)
        d_e = expand_offset(ann.polygon, config.beta)
        region_geom = offset_polygon(ann.polygon, +d_e)
        region_mask = rasterize(region_geom, width, height)
        if not ok:
            _paint_ignore(maps, region_mask)
            continue
        border = region_mask & ~kernel_mask
        offsets = _boundary_offsets(ann.polygon, border, height, width)
        orientations = _kernel_orientations(kernel_mask, border, height, width)
        _paint_instance(maps, ann, region_mask, kernel_mask, offsets, orientations)
    return maps


def encode_msr(
    annotations, width: int, height: int, config: EncoderConfig | None = None
) -> LabelMaps:
    """Encode with the central-region comparison expression.

    The region is the raw annotation polygon, offsets live on kernel pixels
    (distance to the nearest original boundary point) and the orientation
    field stays zero.
    """
    config = config or EncoderConfig()
    _validate_annotations(annotations, width, height)
    maps = _empty_maps(width, height, "msr")
    ignores, valids = _paint_order(annotations)

    for ann in ignores:
        _paint_ignore(maps, rasterize(MultiPolygon((ann.polygon,)), width, height))

    for ann in valids:
        region_mask = rasterize(MultiPolygon((ann.polygon,)), width, height)
        kernel_mask, ok = _shrunk_kernel(ann.polygon, config.alpha, width, height)
        if not ok:
            _paint_ignore(maps, region_mask)
            continue
        offsets = _boundary_offsets(ann.polygon, kernel_mask, height, width)
        orientations = np.zeros((height, width, 2), dtype=np.float32)
        _paint_instance(maps, ann, region_mask, kernel_mask, offsets, orientations)
    return maps


def with_mode(config: EncoderConfig, mode: str) -> EncoderConfig:
    """Copy of ``config`` with a different expression mode."""
    return replace(config, mode=normalize_mode(mode))
