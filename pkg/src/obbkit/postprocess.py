"""Greedy suppression for horizontal and rotated detections, proposal
top-k selection, and merging of per-tile detections into image space.

Suppression is strict (> threshold), so the kept set of one category always
has pairwise IoU <= threshold.  Equal scores are broken by input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .geometry import AxisAlignedBox, RotatedBox, aabb_iou, skew_iou


@dataclass(frozen=True)
class Detection:
    box: RotatedBox | AxisAlignedBox
    score: float
    category: str
    image_id: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be finite in [0,1], got {self.score}")


def _by_score(dets: Sequence[Detection]) -> list[Detection]:
    # stable sort keeps input order on score ties
    return sorted(dets, key=lambda d: -d.score)


def nms(dets: Sequence[Detection], thresh: float) -> list[Detection]:
    """Greedy NMS over horizontal boxes; keeps the highest-scored survivors."""
    if not 0.0 <= thresh <= 1.0:
        raise ValueError(f"threshold must be in [0,1], got {thresh}")
    for d in dets:
        if not isinstance(d.box, AxisAlignedBox):
            raise TypeError("nms expects horizontal AxisAlignedBox detections")
    kept: list[Detection] = []
    for d in _by_score(dets):
        if all(aabb_iou(d.box, k.box) <= thresh for k in kept):
            kept.append(d)
    return kept


def rnms(dets: Sequence[Detection], thresholds: Mapping[str, float]) -> list[Detection]:
    """Per-category greedy NMS over skew IoU; categories never interact.

    Every category present must have a threshold.  Output is sorted by
    descending score (input order on ties).
    """
    for d in dets:
        if not isinstance(d.box, RotatedBox):
            raise TypeError("rnms expects RotatedBox detections")
        if d.category not in thresholds:
            raise ValueError(f"no R-NMS threshold for category {d.category!r}")

    by_cat: dict[str, list[tuple[int, Detection]]] = {}
    for i, d in enumerate(dets):
        by_cat.setdefault(d.category, []).append((i, d))

    kept: list[tuple[int, Detection]] = []
    for cat, group in by_cat.items():
        thresh = thresholds[cat]
        cat_kept: list[tuple[int, Detection]] = []
        for i, d in sorted(group, key=lambda item: -item[1].score):
            if all(skew_iou(d.box, k.box) <= thresh for _, k in cat_kept):
                cat_kept.append((i, d))
        kept.extend(cat_kept)

    return [d for _, d in sorted(kept, key=lambda item: (-item[1].score, item[0]))]


def top_k_then_nms(dets: Sequence[Detection], pre_k: int, post_k: int, thresh: float) -> list[Detection]:
    """Proposal selection: score-truncate to pre_k, NMS, truncate to post_k."""
    if pre_k < 1 or post_k < 1:
        raise ValueError("pre_k and post_k must be >= 1")
    return nms(_by_score(dets)[:pre_k], thresh)[:post_k]


# proposal counts used around the region-proposal stage
TRAIN_PRE_NMS_TOP_K = 12000
TRAIN_POST_NMS_TOP_K = 2000
TEST_PRE_NMS_TOP_K = 10000
TEST_POST_NMS_TOP_K = 300


def translate_detection(det: Detection, dx: float, dy: float) -> Detection:
    box = det.box
    if isinstance(box, RotatedBox):
        moved = RotatedBox(box.cx + dx, box.cy + dy, box.w, box.h, box.theta)
    else:
        moved = AxisAlignedBox(box.xmin + dx, box.ymin + dy, box.xmax + dx, box.ymax + dy)
    return replace(det, box=moved)


def merge_tiles(
    per_tile: Sequence[tuple[tuple[float, float], Sequence[Detection]]],
    thresholds: Mapping[str, float],
) -> list[Detection]:
    """Shift per-tile detections into global coordinates and de-duplicate.

    Detections are translated by their tile origin, pooled, and R-NMS is run
    per image (grouped in first-appearance order) per category.
    """
    pooled: list[Detection] = []
    for (ox, oy), dets in per_tile:
        pooled.extend(translate_detection(d, ox, oy) for d in dets)

    by_image: dict[str, list[Detection]] = {}
    for d in pooled:
        by_image.setdefault(d.image_id, []).append(d)
    merged: list[Detection] = []
    for dets in by_image.values():
        merged.extend(rnms(dets, thresholds))
    return merged
