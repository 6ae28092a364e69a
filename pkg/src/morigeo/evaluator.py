"""COCO-style instance segmentation evaluation: mAP / mAP50 / mAP75.

Average precision uses 10 IoU thresholds 0.50:0.05:0.95, greedy
score-ordered matching, and 101-point interpolated precision. Score ties
break by mask area (larger first), then image order, then input order, so
the global detection ranking is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Sequence

import numpy as np

from .grids import InstanceGrid

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
_RECALL_GRID = np.linspace(0.0, 1.0, 101)
DEFAULT_MAX_DETECTIONS = 100


@dataclass(frozen=True)
class Instance:
    """Ground-truth unit: a nonempty boolean mask with a class id."""

    mask: np.ndarray
    class_id: int

    def __post_init__(self) -> None:
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2 or not m.any():
            raise ValueError("instance mask must be a nonempty 2-D boolean mask")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def area(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class ScoredInstance(Instance):
    """Prediction unit: an instance with a confidence score."""

    score: float = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        if not np.isfinite(self.score):
            raise ValueError("score must be finite")


@dataclass(frozen=True)
class ClassAP:
    """AP averaged over the IoU grid plus the fixed-threshold readouts."""

    ap: float
    ap50: float
    ap75: float


@dataclass(frozen=True)
class APReport:
    """Per-class AP triplets and their unweighted average.

    Classes without ground truth are reported as None and excluded from
    the average; the average itself is None when no class has ground truth.
    """

    per_class: dict[int, ClassAP | None]
    average: ClassAP | None


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two nonempty pixel sets."""
    am = np.asarray(a, dtype=bool)
    bm = np.asarray(b, dtype=bool)
    if am.shape != bm.shape:
        raise ValueError("mask shapes differ")
    if not am.any() or not bm.any():
        raise ValueError("masks must be nonempty")
    inter = int(np.count_nonzero(am & bm))
    union = int(np.count_nonzero(am | bm))
    return inter / union


def _pred_order(preds: Sequence[ScoredInstance]) -> list[int]:
    return sorted(range(len(preds)), key=lambda i: (-preds[i].score, -preds[i].area, i))


def match_instances(
    preds: Sequence[ScoredInstance],
    gts: Sequence[Instance],
    iou_thr: float,
) -> tuple[list[int], np.ndarray]:
    """Greedy matching of score-ranked predictions to ground-truth instances.

    Returns (order, matches): ``order`` ranks prediction indices by
    descending score (ties: larger mask, then input index); ``matches[k]``
    is the ground-truth index matched by the k-th ranked prediction, or -1
    for a false positive. Each prediction takes the unmatched ground truth
    with the highest IoU >= iou_thr; IoU ties go to the lower index.
    """
    classes = {p.class_id for p in preds} | {g.class_id for g in gts}
    if len(classes) > 1:
        raise ValueError("match_instances expects a single class")
    order = _pred_order(preds)
    matches = np.full(len(order), -1, dtype=np.int64)
    taken = np.zeros(len(gts), dtype=bool)
    for k, pi in enumerate(order):
        best_iou = 0.0
        best_gt = -1
        for gi, gt in enumerate(gts):
            if taken[gi]:
                continue
            iou = mask_iou(preds[pi].mask, gt.mask)
            if iou >= iou_thr and iou > best_iou:
                best_iou = iou
                best_gt = gi
        if best_gt >= 0:
            taken[best_gt] = True
            matches[k] = best_gt
    return order, matches


def average_precision(tp_flags: np.ndarray, num_gt: int) -> float | None:
    """101-point interpolated AP from rank-ordered true-positive flags.

    ``tp_flags`` must follow the global detection ranking; returns None
    when there is no ground truth.
    """
    if num_gt <= 0:
        return None
    flags = np.asarray(tp_flags, dtype=bool)
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    for i in range(precision.size - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    inds = np.searchsorted(recall, _RECALL_GRID, side="left")
    sampled = np.where(inds < precision.size, precision[np.minimum(inds, precision.size - 1)], 0.0)
    return float(sampled.mean())


def _class_detections(
    preds_by_image: Sequence[Sequence[ScoredInstance]],
    gts_by_image: Sequence[Sequence[Instance]],
    class_id: int,
    iou_thresholds: Sequence[float],
    max_detections: int,
) -> tuple[np.ndarray, int]:
    """Globally ranked TP flag matrix (n_dets, n_thrs) and the GT count."""
    records: list[tuple[float, int, int, int, list[bool]]] = []
    num_gt = 0
    for img_idx, (preds, gts) in enumerate(zip(preds_by_image, gts_by_image)):
        cls_preds = [p for p in preds if p.class_id == class_id]
        cls_gts = [g for g in gts if g.class_id == class_id]
        num_gt += len(cls_gts)
        order = _pred_order(cls_preds)[:max_detections]
        ranked = [cls_preds[i] for i in order]
        flags_per_thr = []
        for thr in iou_thresholds:
            _, matches = match_instances(ranked, cls_gts, thr)
            flags_per_thr.append(matches >= 0)
        for k, p in enumerate(ranked):
            records.append(
                (p.score, p.area, img_idx, k, [bool(f[k]) for f in flags_per_thr])
            )
    records.sort(key=lambda r: (-r[0], -r[1], r[2], r[3]))
    flags = np.array([r[4] for r in records], dtype=bool).reshape(len(records), len(iou_thresholds))
    return flags, num_gt


def map_report(
    preds_by_image: Sequence[Sequence[ScoredInstance]],
    gts_by_image: Sequence[Sequence[Instance]],
    class_ids: Sequence[int] | None = None,
    iou_thresholds: Sequence[float] = IOU_THRESHOLDS,
    max_detections: int = DEFAULT_MAX_DETECTIONS,
) -> APReport:
    """Dataset-level AP report per class plus the unweighted class average."""
    if len(preds_by_image) != len(gts_by_image):
        raise ValueError("preds and gts must cover the same images")
    if class_ids is None:
        found = {g.class_id for gts in gts_by_image for g in gts}
        found |= {p.class_id for preds in preds_by_image for p in preds}
        class_ids = sorted(found)
    thrs = [float(t) for t in iou_thresholds]
    per_class: dict[int, ClassAP | None] = {}
    for cid in class_ids:
        flags, num_gt = _class_detections(
            preds_by_image, gts_by_image, cid, thrs, max_detections
        )
        if num_gt == 0:
            per_class[cid] = None
            continue
        aps = [average_precision(flags[:, t], num_gt) for t in range(len(thrs))]
        ap = float(np.mean(aps))
        ap50 = aps[thrs.index(0.5)] if 0.5 in thrs else ap
        ap75 = aps[thrs.index(0.75)] if 0.75 in thrs else ap
        per_class[cid] = ClassAP(ap=ap, ap50=float(ap50), ap75=float(ap75))
    scored = [v for v in per_class.values() if v is not None]
    average = None
    if scored:
        average = ClassAP(
            ap=float(np.mean([v.ap for v in scored])),
            ap50=float(np.mean([v.ap50 for v in scored])),
            ap75=float(np.mean([v.ap75 for v in scored])),
        )
    return APReport(per_class=per_class, average=average)


def grid_to_instances(
    inst: InstanceGrid,
    class_id: int = 1,
    scores: dict[int, float] | None = None,
) -> list[ScoredInstance]:
    """Expand an instance grid into scored per-instance masks (default score 1.0)."""
    out = []
    for m in range(1, inst.num_instances + 1):
        score = 1.0 if scores is None else float(scores.get(m, 1.0))
        out.append(ScoredInstance(mask=inst.ids == m, class_id=class_id, score=score))
    return out
