"""IoU, precision-recall curves and (mean) average precision for box detections."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from ..annotations import AnnotationSet, BoundingBox

MAP_VARIANTS = {
    "mAP50": (0.5,),
    "mAP75": (0.75,),
    "mAP50:95": tuple(round(0.5 + 0.05 * i, 2) for i in range(10)),
}


class UndefinedMetric(ValueError):
    pass


def _extent(box) -> tuple[float, float, float, float]:
    if isinstance(box, BoundingBox):
        return box.to_xywh()
    x, y, w, h = box
    return float(x), float(y), float(w), float(h)


def iou(a, b) -> float:
    """Intersection over union of two boxes (``BoundingBox`` or ``(x, y, w, h)``)."""
    ax, ay, aw, ah = _extent(a)
    bx, by, bw, bh = _extent(b)
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class PrCurve:
    points: tuple[tuple[float, float], ...]  # (recall, precision), detection order
    true_positive: int
    false_positive: int
    false_negative: int


@dataclass(frozen=True)
class ApResult:
    per_class: dict[int, float]
    iou_threshold: float

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.per_class.values())))


def _as_list(sets) -> list[AnnotationSet]:
    return [sets] if isinstance(sets, AnnotationSet) else list(sets)


def _pair_images(detections, truth) -> list[tuple[AnnotationSet | None, AnnotationSet]]:
    dets = {d.image_id: d for d in _as_list(detections)}
    gts = _as_list(truth)
    known = {g.image_id for g in gts}
    stray = sorted(set(dets) - known)
    if stray:
        raise ValueError(f"detections reference images absent from the truth: {stray}")
    return [(dets.get(g.image_id), g) for g in gts]


def match_detections(
    dets: Sequence[BoundingBox], truths: Sequence[BoundingBox], iou_threshold: float
) -> list[bool]:
    """Greedy matching for one image and class, in the order ``dets`` is given.

    Each detection takes the unmatched truth with the highest IoU at or above
    the threshold; equal IoUs go to the lower truth index.
    """
    used = [False] * len(truths)
    hits = []
    for d in dets:
        best, best_iou = -1, iou_threshold
        for j, t in enumerate(truths):
            if used[j]:
                continue
            v = iou(d, t)
            if v >= best_iou and (best < 0 or v > best_iou):
                best, best_iou = j, v
        if best >= 0:
            used[best] = True
        hits.append(best >= 0)
    return hits


def _class_hits(pairs, cls: int, thr: float) -> tuple[list[tuple[float, bool]], int]:
    scored: list[tuple[float, int, bool]] = []
    npos = 0
    seq = 0
    for det, gt in pairs:
        truths = [b for b in gt.boxes if b.class_id == cls]
        npos += len(truths)
        boxes = [b for b in (det.boxes if det else ()) if b.class_id == cls]
        # stable sort keeps input order among equal scores
        order = sorted(range(len(boxes)), key=lambda i: -(boxes[i].score or 0.0))
        ranked = [boxes[i] for i in order]
        for b, hit in zip(ranked, match_detections(ranked, truths, thr)):
            scored.append((b.score or 0.0, seq, hit))
            seq += 1
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(s, h) for s, _, h in scored], npos


def curve_from_hits(hits: Sequence[bool], npos: int) -> PrCurve:
    tp = fp = 0
    points = []
    for h in hits:
        tp += h
        fp += not h
        points.append((tp / npos if npos else 0.0, tp / (tp + fp)))
    return PrCurve(tuple(points), tp, fp, npos - tp)


def ap_from_curve(curve: PrCurve,
                  interpolation: Literal["all-point", "101-point"] = "all-point") -> float:
    if not curve.points:
        return 0.0
    rec = np.array([r for r, _ in curve.points])
    prec = np.array([p for _, p in curve.points])
    # envelope: best precision reachable at this recall or beyond
    env = np.maximum.accumulate(prec[::-1])[::-1]
    if interpolation == "all-point":
        prev = np.concatenate(([0.0], rec[:-1]))
        return float(np.sum((rec - prev) * env))
    if interpolation == "101-point":
        grid = np.linspace(0.0, 1.0, 101)
        idx = np.searchsorted(rec, grid, side="left")
        vals = np.where(idx < len(rec), env[np.minimum(idx, len(rec) - 1)], 0.0)
        return float(vals.mean())
    raise ValueError(f"unknown interpolation {interpolation!r}")


def pr_curve(detections, truth, class_id: int, iou_threshold: float = 0.5) -> PrCurve:
    hits, npos = _class_hits(_pair_images(detections, truth), class_id, iou_threshold)
    return curve_from_hits([h for _, h in hits], npos)


def average_precision(
    detections: AnnotationSet | Iterable[AnnotationSet],
    truth: AnnotationSet | Iterable[AnnotationSet],
    iou_threshold: float = 0.5,
    interpolation: Literal["all-point", "101-point"] = "all-point",
) -> ApResult:
    """Per-class AP; classes without any truth box are left out."""
    pairs = _pair_images(detections, truth)
    classes = sorted({b.class_id for _, g in pairs for b in g.boxes})
    if not classes:
        raise UndefinedMetric("AP is undefined without any ground-truth boxes")
    per_class = {}
    for cls in classes:
        hits, npos = _class_hits(pairs, cls, iou_threshold)
        per_class[cls] = ap_from_curve(curve_from_hits([h for _, h in hits], npos),
                                       interpolation)
    return ApResult(per_class, iou_threshold)


def mean_ap(
    detections,
    truth,
    variant: str = "mAP50",
    interpolation: Literal["all-point", "101-point"] = "all-point",
) -> float:
    try:
        thresholds = MAP_VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown mAP variant {variant!r}; "
                         f"expected one of {', '.join(MAP_VARIANTS)}") from None
    detections, truth = _as_list(detections), _as_list(truth)
    return float(np.mean([average_precision(detections, truth, t, interpolation).mean
                          for t in thresholds]))
