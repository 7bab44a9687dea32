"""Reconstruct text instance polygons from predicted score maps.

Pipeline: binarize the region/kernel maps, label kernel connected
components, attach border pixels to their nearest kernel under a distance
gate and a cosine gate on the predicted orientation, shift the attached
pixels by their predicted offsets, and wrap each group's shifted points in a
concave hull.  The companion ``decode_msr`` path shifts kernel pixels
directly and skips the gating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .encoder import LabelMaps
from .errors import ParameterError, ShapeError
from .geometry import Polygon, alpha_shape_auto

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class DecoderConfig:
    gamma: float = 3.0              # distance gate, in gate units
    epsilon: float = 0.9063         # cosine gate, cos(25 deg)
    gamma_scale: float = 4.0        # px per gate unit (stride of the prediction grid)
    min_kernel_area: int = 16       # components smaller than this are dropped, px^2
    binarize_region: float = 0.5
    binarize_kernel: float = 0.5
    alpha_radius_scale: float = 2.0  # multiplies the median point spacing
    connectivity: int = 8

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if not -1.0 <= self.epsilon <= 1.0:
            raise ParameterError(f"epsilon must be in [-1, 1], got {self.epsilon}")
        if self.gamma_scale <= 0.0:
            raise ParameterError(f"gamma_scale must be positive, got {self.gamma_scale}")
        if self.connectivity not in (4, 8):
            raise ParameterError(f"connectivity must be 4 or 8, got {self.connectivity}")
        for name in ("binarize_region", "binarize_kernel"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {value}")

    @property
    def distance_gate(self) -> float:
        """Full-resolution distance gate in px."""
        return self.gamma * self.gamma_scale


@dataclass
class ScoreMaps:
    """Predicted maps: region/kernel probabilities plus offset/orientation."""

    text_region: np.ndarray
    text_kernel: np.ndarray
    offset: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        shape = self.text_region.shape
        if len(shape) != 2:
            raise ShapeError(f"text_region must be 2-D, got shape {shape}")
        if self.text_kernel.shape != shape:
            raise ShapeError(f"text_kernel shape {self.text_kernel.shape} != {shape}")
        for name in ("offset", "orientation"):
            if getattr(self, name).shape != shape + (2,):
                raise ShapeError(f"{name} shape {getattr(self, name).shape} != {shape + (2,)}")

    @property
    def height(self) -> int:
        return self.text_region.shape[0]

    @property
    def width(self) -> int:
        return self.text_region.shape[1]

    @classmethod
    def from_labels(cls, maps: LabelMaps) -> "ScoreMaps":
        """Perfect predictions derived from ground-truth label maps."""
        return cls(
            text_region=maps.text_region.astype(np.float32),
            text_kernel=maps.text_kernel.astype(np.float32),
            offset=maps.offset.copy(),
            orientation=maps.orientation.copy(),
        )


@dataclass(frozen=True)
class DecodedInstance:
    polygon: Polygon
    kernel_id: int
    score: float


def connected_components(mask: np.ndarray, connectivity: int = 8, min_area: int = 0):
    """Label a binary mask.

    Returns ``(labels, count)`` where labels is int32 with -1 background and
    components numbered 0..count-1 in row-major first-encounter order;
    components smaller than ``min_area`` pixels are removed.
    """
    if connectivity not in (4, 8):
        raise ParameterError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _EIGHT_CONNECTED if connectivity == 8 else _FOUR_CONNECTED
    raw, n = ndimage.label(mask, structure=structure)
    out = np.full(mask.shape, -1, dtype=np.int32)
    if n == 0:
        return out, 0
    flat = raw.ravel()
    labels, first = np.unique(flat, return_index=True)
    counts = np.bincount(flat, minlength=n + 1)
    order = []
    for lab, pos in sorted(zip(labels, first), key=lambda t: t[1]):
        if lab == 0 or counts[lab] < min_area:
            continue
        order.append(lab)
    lookup = np.full(n + 1, -1, dtype=np.int32)
    for new, lab in enumerate(order):
        lookup[lab] = new
    out = lookup[raw]
    return out, len(order)


def _binarize(maps: ScoreMaps, cfg: DecoderConfig):
    region = np.asarray(maps.text_region, dtype=np.float64) >= cfg.binarize_region
    kernel = (np.asarray(maps.text_kernel, dtype=np.float64) >= cfg.binarize_kernel) & region
    return region, kernel


def _unit_orientations(orientation: np.ndarray):
    vec = np.asarray(orientation, dtype=np.float64)
    norm = np.hypot(vec[..., 0], vec[..., 1])
    safe = np.where(norm == 0.0, 1.0, norm)
    return vec / safe[..., None]


def group_border_pixels(
    maps: ScoreMaps, kernels: np.ndarray, cfg: DecoderConfig | None = None
) -> np.ndarray:
    """Assign border pixels to kernel components.

    A border pixel joins the component of its nearest kernel pixel when that
    pixel is closer than ``gamma * gamma_scale`` px and the unit vector
    toward it agrees with the predicted orientation (dot product above
    ``epsilon``).  Pixels failing either gate are deserted (-1).
    """
    cfg = cfg or DecoderConfig()
    if kernels.shape != maps.text_region.shape:
        raise ShapeError(f"kernel labels shape {kernels.shape} != {maps.text_region.shape}")
    region_bin, kernel_bin = _binarize(maps, cfg)
    border = region_bin & ~kernel_bin
    out = np.full(kernels.shape, -1, dtype=np.int32)
    if not border.any() or not (kernels >= 0).any():
        return out
    dist, (near_i, near_j) = ndimage.distance_transform_edt(kernels < 0, return_indices=True)
    height, width = kernels.shape
    jj, ii = np.meshgrid(np.arange(width), np.arange(height))
    dx = near_j - jj
    dy = near_i - ii
    safe = np.where(dist == 0.0, 1.0, dist)
    unit = _unit_orientations(maps.orientation)
    cos = (dx * unit[..., 0] + dy * unit[..., 1]) / safe
    accept = border & (dist < cfg.distance_gate) & (cos > cfg.epsilon)
    out[accept] = kernels[near_i[accept], near_j[accept]]
    return out


def shift_points(groups: np.ndarray, group_count: int, offset: np.ndarray):
    """Shifted point cloud per group: pixel centre plus predicted offset.

    Points are clamped to the image rectangle.  Returns a list of (n, 2)
    float64 arrays indexed by group id.
    """
    if offset.shape != groups.shape + (2,):
        raise ShapeError(f"offset shape {offset.shape} != {groups.shape + (2,)}")
    height, width = groups.shape
    out = []
    for k in range(group_count):
        ii, jj = np.nonzero(groups == k)
        pts = np.stack([jj + 0.5, ii + 0.5], axis=1)
        pts = pts + np.asarray(offset[ii, jj], dtype=np.float64)
        pts[:, 0] = np.clip(pts[:, 0], 0.0, float(width))
        pts[:, 1] = np.clip(pts[:, 1], 0.0, float(height))
        out.append(pts)
    return out


def _instance_from_points(points, kernel_id, score_map, member_mask, cfg):
    if points.shape[0] < 3:
        return None
    polygon = alpha_shape_auto(points, cfg.alpha_radius_scale)
    if polygon is None:
        return None
    score = float(np.asarray(score_map, dtype=np.float64)[member_mask].mean())
    return DecodedInstance(polygon=polygon, kernel_id=int(kernel_id), score=score)


def decode(maps: ScoreMaps, config: DecoderConfig | None = None):
    """Full post-processing: score maps to a list of DecodedInstance.

    Instances are sorted by kernel id; groups with fewer than three shifted
    points or an unusable hull are dropped.  Pure function of its inputs.
    """
    cfg = config or DecoderConfig()
    _, kernel_bin = _binarize(maps, cfg)
    kernels, count = connected_components(kernel_bin, cfg.connectivity, cfg.min_kernel_area)
    if count == 0:
        return []
    groups = group_border_pixels(maps, kernels, cfg)
    shifted = shift_points(groups, count, maps.offset)
    instances = []
    for k in range(count):
        member = (groups == k) | (kernels == k)
        inst = _instance_from_points(shifted[k], k, maps.text_region, member, cfg)
        if inst is not None:
            instances.append(inst)
    return instances


def decode_msr(maps: ScoreMaps, config: DecoderConfig | None = None):
    """Comparison-mode post-processing: shift kernel pixels, no gating."""
    cfg = config or DecoderConfig()
    _, kernel_bin = _binarize(maps, cfg)
    kernels, count = connected_components(kernel_bin, cfg.connectivity, cfg.min_kernel_area)
    if count == 0:
        return []
    shifted = shift_points(kernels, count, maps.offset)
    instances = []
    for k in range(count):
        member = kernels == k
        inst = _instance_from_points(shifted[k], k, maps.text_region, member, cfg)
        if inst is not None:
            instances.append(inst)
    return instances
