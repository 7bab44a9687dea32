"""Detection evaluation: IoU threshold sweeps and the TR/TP area protocol.

Matching is greedy in descending detection-score order, one ground truth per
detection.  Detections that stay unmatched and sit mostly inside an ignore
region (area precision >= 0.5 against the ignore polygon) are discarded from
the precision denominator, following the usual "do not care" convention.
Dataset metrics are micro-averaged: counts are summed over images first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ParameterError
from .geometry import _as_valid_shapely

IGNORE_OVERLAP = 0.5


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple = (0.5, 0.6, 0.7, 0.8, 0.9)
    tr: float = 0.7  # minimum area recall on the ground truth
    tp: float = 0.6  # minimum area precision on the detection

    def __post_init__(self):
        thresholds = tuple(float(t) for t in self.iou_thresholds)
        if not thresholds:
            raise ParameterError("iou_thresholds must not be empty")
        if any(not 0.0 < t <= 1.0 for t in thresholds):
            raise ParameterError(f"iou thresholds must lie in (0, 1], got {thresholds}")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ParameterError(f"iou thresholds must be strictly increasing, got {thresholds}")
        object.__setattr__(self, "iou_thresholds", thresholds)
        for name in ("tr", "tp"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ParameterError(f"{name} must be in (0, 1], got {value}")


@dataclass
class MatchCounts:
    """Micro-averageable counters for one protocol on one or more images."""

    tp: int = 0
    det_count: int = 0   # detections after ignore filtering
    gt_count: int = 0    # non-ignore ground truths
    ignored_dets: int = 0

    def add(self, other: "MatchCounts"):
        self.tp += other.tp
        self.det_count += other.det_count
        self.gt_count += other.gt_count
        self.ignored_dets += other.ignored_dets

    @property
    def precision(self) -> float:
        return self.tp / self.det_count if self.det_count else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.gt_count if self.gt_count else 0.0

    @property
    def fscore(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0


@dataclass
class MatchResult:
    counts: MatchCounts
    matches: list = field(default_factory=list)  # (det_idx, gt_idx, iou)

    @property
    def precision(self):
        return self.counts.precision

    @property
    def recall(self):
        return self.counts.recall

    @property
    def fscore(self):
        return self.counts.fscore


def _shapely_cache(polygons):
    return [_as_valid_shapely(p) for p in polygons]


def _det_order(dets):
    return sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))


def _discard_in_ignore(det_shapes, unmatched, ignore_shapes):
    discarded = set()
    for di in unmatched:
        det = det_shapes[di]
        if det.area <= 0.0:
            continue
        for ig in ignore_shapes:
            if det.intersection(ig).area / det.area >= IGNORE_OVERLAP:
                discarded.add(di)
                break
    return discarded


def match_iou(dets, gts, threshold: float) -> MatchResult:
    """Greedy IoU matching for one image at one threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ParameterError(f"iou threshold must be in (0, 1], got {threshold}")
    care_idx = [i for i, g in enumerate(gts) if not g.ignore]
    ignore_shapes = _shapely_cache([g.polygon for g in gts if g.ignore])
    care_shapes = _shapely_cache([gts[i].polygon for i in care_idx])
    det_shapes = _shapely_cache([d.polygon for d in dets])

    matched_gt = set()
    matches = []
    matched_det = set()
    for di in _det_order(dets):
        best_iou, best_gt = 0.0, -1
        det = det_shapes[di]
        for gi, gt_shape in enumerate(care_shapes):
            if gi in matched_gt:
                continue
            inter = det.intersection(gt_shape).area
            union = det.area + gt_shape.area - inter
            iou = inter / union if union > 0.0 else 0.0
            if iou > best_iou:
                best_iou, best_gt = iou, gi
        if best_gt >= 0 and best_iou >= threshold:
            matched_gt.add(best_gt)
            matched_det.add(di)
            matches.append((di, care_idx[best_gt], best_iou))

    unmatched = [i for i in range(len(dets)) if i not in matched_det]
    discarded = _discard_in_ignore(det_shapes, unmatched, ignore_shapes)
    counts = MatchCounts(
        tp=len(matches),
        det_count=len(dets) - len(discarded),
        gt_count=len(care_idx),
        ignored_dets=len(discarded),
    )
    return MatchResult(counts=counts, matches=matches)


def match_deteval(dets, gts, config: EvalConfig | None = None) -> MatchResult:
    """One-to-one TR/TP area matching for one image.

    A pair counts when ``inter/gt_area >= tr`` and ``inter/det_area >= tp``;
    one-to-many and many-to-one configurations earn no credit.
    """
    cfg = config or EvalConfig()
    care_idx = [i for i, g in enumerate(gts) if not g.ignore]
    ignore_shapes = _shapely_cache([g.polygon for g in gts if g.ignore])
    care_shapes = _shapely_cache([gts[i].polygon for i in care_idx])
    det_shapes = _shapely_cache([d.polygon for d in dets])

    matched_gt = set()
    matched_det = set()
    matches = []
    for di in _det_order(dets):
        det = det_shapes[di]
        best_inter, best_gt = 0.0, -1
        for gi, gt_shape in enumerate(care_shapes):
            if gi in matched_gt:
                continue
            inter = det.intersection(gt_shape).area
            if gt_shape.area <= 0.0 or det.area <= 0.0:
                continue
            if inter / gt_shape.area >= cfg.tr and inter / det.area >= cfg.tp:
                if inter > best_inter:
                    best_inter, best_gt = inter, gi
        if best_gt >= 0:
            matched_gt.add(best_gt)
            matched_det.add(di)
            matches.append((di, care_idx[best_gt], best_inter))

    unmatched = [i for i in range(len(dets)) if i not in matched_det]
    discarded = _discard_in_ignore(det_shapes, unmatched, ignore_shapes)
    counts = MatchCounts(
        tp=len(matches),
        det_count=len(dets) - len(discarded),
        gt_count=len(care_idx),
        ignored_dets=len(discarded),
    )
    return MatchResult(counts=counts, matches=matches)


@dataclass
class ThresholdMetrics:
    threshold: float
    precision: float
    recall: float
    fscore: float
    tp: int
    det_count: int
    gt_count: int
    ignored_dets: int


@dataclass
class EvalReport:
    """Dataset-level sweep: one row per IoU threshold plus the TR/TP row."""

    thresholds: list
    deteval: ThresholdMetrics
    matches: dict = field(default_factory=dict)  # threshold -> [(img, det, gt, iou)]

    def fscore_at(self, threshold: float) -> float:
        for row in self.thresholds:
            if row.threshold is not None and abs(row.threshold - threshold) < 1e-9:
                return row.fscore
        raise KeyError(f"no row for threshold {threshold}")

    def to_table(self) -> str:
        lines = [f"{'threshold':>10} {'precision':>10} {'recall':>10} {'fscore':>10}"]
        for row in self.thresholds:
            lines.append(
                f"{row.threshold:>10.2f} {row.precision:>10.4f} "
                f"{row.recall:>10.4f} {row.fscore:>10.4f}"
            )
        d = self.deteval
        lines.append(
            f"{'tr/tp':>10} {d.precision:>10.4f} {d.recall:>10.4f} {d.fscore:>10.4f}"
        )
        return "\n".join(lines)

    def to_json(self) -> str:
        payload = {
            "thresholds": [vars(row) for row in self.thresholds],
            "deteval": vars(self.deteval),
            "matches": {
                f"{t:g}": [list(m) for m in ms] for t, ms in self.matches.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _metrics_row(threshold, counts: MatchCounts) -> ThresholdMetrics:
    return ThresholdMetrics(
        threshold=None if threshold is None else float(threshold),
        precision=counts.precision,
        recall=counts.recall,
        fscore=counts.fscore,
        tp=counts.tp,
        det_count=counts.det_count,
        gt_count=counts.gt_count,
        ignored_dets=counts.ignored_dets,
    )


def sweep(dets_per_image, gts_per_image, config: EvalConfig | None = None) -> EvalReport:
    """Run every IoU threshold plus the TR/TP protocol over a dataset."""
    cfg = config or EvalConfig()
    if len(dets_per_image) != len(gts_per_image):
        raise ParameterError(
            f"detections for {len(dets_per_image)} images but ground truth for "
            f"{len(gts_per_image)}"
        )
    rows = []
    match_log = {}
    for threshold in cfg.iou_thresholds:
        total = MatchCounts()
        logged = []
        for img, (dets, gts) in enumerate(zip(dets_per_image, gts_per_image)):
            result = match_iou(dets, gts, threshold)
            total.add(result.counts)
            logged.extend((img, di, gi, iou) for di, gi, iou in result.matches)
        rows.append(_metrics_row(threshold, total))
        match_log[threshold] = logged
    det_total = MatchCounts()
    for dets, gts in zip(dets_per_image, gts_per_image):
        det_total.add(match_deteval(dets, gts, cfg).counts)
    report = EvalReport(
        thresholds=rows,
        deteval=_metrics_row(None, det_total),
        matches=match_log,
    )
    return report
