"""The training objective as plain array math (no autograd).

Region and kernel masks use dice loss, with online hard example mining
selecting the negatives for the region term.  Offsets use smooth L1 and
orientations a cosine loss, both averaged over the border pixels.  The total
is ``L_text + lambda1 * L_kernel + lambda2 * (L_offset + L_orientation)``.
Empty denominators (no border pixels, empty selection) yield 0 by
convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import ScoreMaps
from .encoder import LabelMaps
from .errors import ParameterError, ShapeError

# Fallback negative quota when an image has no positive pixels.
_NO_POSITIVE_FLOOR = 256


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 0.5    # kernel term weight
    lambda2: float = 0.1    # offset + orientation weight
    ohem_ratio: float = 3.0  # negatives kept per positive

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "ohem_ratio"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass
class PredictionBatch:
    """Predicted score maps paired with their ground-truth label maps."""

    pred: ScoreMaps
    truth: LabelMaps

    def __post_init__(self):
        if self.pred.text_region.shape != self.truth.text_region.shape:
            raise ShapeError(
                f"prediction shape {self.pred.text_region.shape} != "
                f"truth shape {self.truth.text_region.shape}"
            )


@dataclass(frozen=True)
class LossBreakdown:
    text: float
    kernel: float
    offset: float
    orientation: float
    total: float

    def as_dict(self):
        return {
            "text": self.text,
            "kernel": self.kernel,
            "offset": self.offset,
            "orientation": self.orientation,
            "total": self.total,
        }


def _check_same_shape(reference, *others):
    for arr in others:
        if arr is not None and arr.shape != reference.shape:
            raise ShapeError(f"array shape {arr.shape} != {reference.shape}")


def dice_loss(pred: np.ndarray, gt: np.ndarray, select: np.ndarray | None = None) -> float:
    """``1 - 2*sum(p*g) / (sum(p^2) + sum(g^2))`` over selected pixels."""
    _check_same_shape(pred, gt, select)
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if select is not None:
        p = p[select]
        g = g[select]
    denom = float((p * p).sum() + (g * g).sum())
    if denom == 0.0:
        return 0.0
    return float(1.0 - 2.0 * float((p * g).sum()) / denom)


def ohem_select(
    pred: np.ndarray,
    gt: np.ndarray,
    train_mask: np.ndarray | None = None,
    ratio: float = 3.0,
) -> np.ndarray:
    """Hard-negative selection mask.

    Keeps every positive pixel and the ``ratio * #positives`` negatives with
    the highest predicted text probability (ties broken in row-major order).
    With no positives at all, ``max(ratio * 256, 256)`` negatives are kept.
    """
    if ratio <= 0.0:
        raise ParameterError(f"ohem ratio must be positive, got {ratio}")
    _check_same_shape(pred, gt, train_mask)
    gt_bool = np.asarray(gt, dtype=bool)
    train = np.ones_like(gt_bool) if train_mask is None else np.asarray(train_mask, dtype=bool)
    positives = gt_bool & train
    negatives = ~gt_bool & train
    n_pos = int(positives.sum())
    if n_pos > 0:
        quota = int(ratio * n_pos)
    else:
        quota = max(int(ratio * _NO_POSITIVE_FLOOR), _NO_POSITIVE_FLOOR)
    selection = positives.copy()
    neg_flat = np.flatnonzero(negatives.ravel())
    quota = min(quota, neg_flat.size)
    if quota > 0:
        scores = np.asarray(pred, dtype=np.float64).ravel()[neg_flat]
        hardest = np.argsort(-scores, kind="stable")[:quota]
        selection.ravel()[neg_flat[hardest]] = True
    return selection


def _smooth_l1(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    return np.where(a < 1.0, 0.5 * a * a, a - 0.5)


def offset_loss(pred: np.ndarray, gt: np.ndarray, border: np.ndarray) -> float:
    """Mean smooth-L1 over border pixels, channels summed per pixel."""
    _check_same_shape(pred, gt)
    _check_same_shape(pred[..., 0], border)
    if not border.any():
        return 0.0
    diff = np.asarray(pred, dtype=np.float64)[border] - np.asarray(gt, dtype=np.float64)[border]
    return float(_smooth_l1(diff).sum(axis=1).mean())


def _normalized(vectors: np.ndarray) -> np.ndarray:
    norm = np.hypot(vectors[:, 0], vectors[:, 1])
    safe = np.where(norm == 0.0, 1.0, norm)
    return vectors / safe[:, None]


def orientation_loss(pred: np.ndarray, gt: np.ndarray, border: np.ndarray) -> float:
    """Mean of ``1 - cos(angle)`` over border pixels.

    Both sides are normalized per pixel (ground truth labels are stored in
    single precision, so their norm is only approximately 1).  For unit
    vectors ``1 - cos`` equals ``|u - v|^2 / 2``, which is what is computed:
    it is exactly zero for identical inputs and never negative.  A zero
    prediction counts as a full unit of loss at its pixel.
    """
    _check_same_shape(pred, gt)
    _check_same_shape(pred[..., 0], border)
    if not border.any():
        return 0.0
    p = np.asarray(pred, dtype=np.float64)[border]
    g = np.asarray(gt, dtype=np.float64)[border]
    defined = (np.hypot(p[:, 0], p[:, 1]) > 0.0) & (np.hypot(g[:, 0], g[:, 1]) > 0.0)
    diff = _normalized(p) - _normalized(g)
    per_pixel = np.minimum(0.5 * (diff * diff).sum(axis=1), 2.0)
    per_pixel[~defined] = 1.0
    return float(per_pixel.mean())


def total_loss(batch: PredictionBatch, weights: LossWeights | None = None) -> LossBreakdown:
    """Weighted objective with a per-term breakdown.

    The region term runs on the OHEM selection, the kernel term only on
    ground-truth text-region pixels, and the regression terms on the border
    pixels carrying labels; all three respect the train mask.
    """
    w = weights or LossWeights()
    truth = batch.truth
    pred = batch.pred
    train = truth.train_mask
    text_sel = ohem_select(pred.text_region, truth.text_region, train, w.ohem_ratio)
    l_text = dice_loss(pred.text_region, truth.text_region, text_sel)
    l_kernel = dice_loss(pred.text_kernel, truth.text_kernel, truth.text_region & train)
    border = truth.regression_mask & train
    l_offset = offset_loss(pred.offset, truth.offset, border)
    l_orientation = orientation_loss(pred.orientation, truth.orientation, border)
    total = l_text + w.lambda1 * l_kernel + w.lambda2 * (l_offset + l_orientation)
    return LossBreakdown(
        text=l_text,
        kernel=l_kernel,
        offset=l_offset,
        orientation=l_orientation,
        total=float(total),
    )


def finite_difference(fn, array: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar map function.

    Intended for validating differentiable ports of these losses; ``fn``
    receives a perturbed copy of ``array`` and returns a float.
    """
    base = np.asarray(array, dtype=np.float64)
    grad = np.zeros_like(base)
    flat = base.ravel()
    gflat = grad.ravel()
    for idx in range(flat.size):
        saved = flat[idx]
        flat[idx] = saved + eps
        hi = fn(base)
        flat[idx] = saved - eps
        lo = fn(base)
        flat[idx] = saved
        gflat[idx] = (hi - lo) / (2.0 * eps)
    return grad
