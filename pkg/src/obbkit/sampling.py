"""Anchor lattice generation, IoU-threshold label assignment, and the
expected max overlap (EMO) statistic for a configurable anchor stride.

The stride is a free parameter here: nothing ties it to a feature-map
reduction factor, so non-power-of-two values can be swept directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import AxisAlignedBox, aabb_iou

POSITIVE = 1
NEGATIVE = 0
IGNORE = -1


@dataclass(frozen=True)
class AnchorSpec:
    stride: float
    base_size: float
    scales: tuple[float, ...]
    ratios: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.stride <= 0 or self.base_size <= 0:
            raise ValueError("stride and base_size must be positive")
        if not self.scales or not self.ratios:
            raise ValueError("scales and ratios must be nonempty")
        if any(s <= 0 for s in self.scales) or any(r <= 0 for r in self.ratios):
            raise ValueError("scales and ratios must be positive")


# anchor scales 2^-4 .. 2^1 at base 256 with the 8-ratio list; lattice thresholds
# 0.7/0.3 for the horizontal stage, 0.4/0.4 when matching rotated boxes.
DEFAULT_SCALES = tuple(2.0**e for e in range(-4, 2))
DEFAULT_RATIOS = (1 / 1, 1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6, 1 / 7, 1 / 9)
DEFAULT_BASE_SIZE = 256.0
STAGE1_POS_THRESH = 0.7
STAGE1_NEG_THRESH = 0.3
STAGE2_POS_THRESH = 0.4
STAGE2_NEG_THRESH = 0.4


@dataclass(frozen=True)
class Anchor:
    box: AxisAlignedBox
    row: int
    col: int
    scale_index: int
    ratio_index: int


@dataclass(frozen=True)
class AnchorSet:
    rows: int
    cols: int
    spec: AnchorSpec
    anchors: tuple[Anchor, ...]

    def boxes(self) -> list[AxisAlignedBox]:
        return [a.box for a in self.anchors]

    def __len__(self) -> int:
        return len(self.anchors)


def generate_anchors(rows: int, cols: int, spec: AnchorSpec) -> AnchorSet:
    """Anchors on the half-stride-centered lattice.

    Cell (i, j) gets center ((j+0.5)*stride, (i+0.5)*stride); each (scale,
    ratio) pair gives width base*scale*sqrt(ratio) and height
    base*scale/sqrt(ratio), so area is ratio-invariant at fixed scale.
    Anchors may extend past the lattice extent.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    anchors = []
    for i in range(rows):
        cy = (i + 0.5) * spec.stride
        for j in range(cols):
            cx = (j + 0.5) * spec.stride
            for si, s in enumerate(spec.scales):
                for ri, r in enumerate(spec.ratios):
                    w = spec.base_size * s * math.sqrt(r)
                    h = spec.base_size * s / math.sqrt(r)
                    box = AxisAlignedBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
                    anchors.append(Anchor(box, i, j, si, ri))
    return AnchorSet(rows, cols, spec, tuple(anchors))


@dataclass(frozen=True)
class AssignmentResult:
    """Per-anchor POSITIVE/NEGATIVE/IGNORE labels plus matched gt indices (-1 if none)."""

    labels: np.ndarray
    matched_gt: np.ndarray

    def positives(self) -> np.ndarray:
        return np.flatnonzero(self.labels == POSITIVE)


def assign_labels(
    anchors: AnchorSet | Sequence,
    gts: Sequence,
    pos_thresh: float,
    neg_thresh: float,
    iou_fn: Callable = aabb_iou,
) -> AssignmentResult:
    """Threshold assignment with forced per-gt argmax positives.

    An anchor is positive when its best IoU exceeds pos_thresh, or when it is
    the highest-IoU anchor of some gt (first index on ties), so no gt is left
    without a positive sample.  Negatives fall below neg_thresh; everything
    else is ignored.  iou_fn selects the geometry (axis-aligned by default,
    pass a rotated IoU for second-stage assignment).
    """
    if not 0 <= neg_thresh <= pos_thresh <= 1:
        raise ValueError("need 0 <= neg_thresh <= pos_thresh <= 1")
    boxes = anchors.boxes() if isinstance(anchors, AnchorSet) else list(anchors)
    n = len(boxes)
    labels = np.full(n, NEGATIVE, dtype=int)
    matched = np.full(n, -1, dtype=int)
    if not gts:
        return AssignmentResult(labels, matched)

    iou = np.zeros((n, len(gts)))
    for i, a in enumerate(boxes):
        for k, g in enumerate(gts):
            iou[i, k] = iou_fn(a, g)

    best_iou = iou.max(axis=1)
    best_gt = iou.argmax(axis=1)

    labels[best_iou >= neg_thresh] = IGNORE
    pos = best_iou > pos_thresh
    labels[pos] = POSITIVE
    matched[pos] = best_gt[pos]
    # guarantee every gt at least one positive anchor
    for k in range(len(gts)):
        i = int(iou[:, k].argmax())
        labels[i] = POSITIVE
        matched[i] = k
    return AssignmentResult(labels, matched)


def expected_max_iou(
    obj_w: float,
    obj_h: float,
    anchor_w: float,
    anchor_h: float,
    stride: float,
    samples: int = 32,
) -> float:
    """Expected best object-anchor IoU over object placement within one cell.

    Object centers run over a regular samples x samples grid inside a
    stride x stride cell; anchors of the given shape sit at every lattice
    center ((k+0.5)*stride).  Axis-aligned IoU is separable, so only lattice
    points near the object can win the max; a 5x5 neighborhood of the nearest
    center is scanned, which always contains the optimum.
    """
    if min(obj_w, obj_h, anchor_w, anchor_h, stride) <= 0:
        raise ValueError("sizes and stride must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")

    offs = (np.arange(samples) + 0.5) / samples * stride
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    obj_area = obj_w * obj_h
    anchor_area = anchor_w * anchor_h

    nearest_x = np.round(ox / stride - 0.5)
    nearest_y = np.round(oy / stride - 0.5)
    best = np.zeros_like(ox)
    for di in range(-2, 3):
        ax = (nearest_x + di + 0.5) * stride
        ow = np.maximum(
            0.0,
            np.minimum(ox + obj_w / 2, ax + anchor_w / 2)
            - np.maximum(ox - obj_w / 2, ax - anchor_w / 2),
        )
        for dj in range(-2, 3):
            ay = (nearest_y + dj + 0.5) * stride
            oh = np.maximum(
                0.0,
                np.minimum(oy + obj_h / 2, ay + anchor_h / 2)
                - np.maximum(oy - obj_h / 2, ay - anchor_h / 2),
            )
            inter = ow * oh
            iou = inter / (obj_area + anchor_area - inter)
            np.maximum(best, iou, out=best)
    return float(best.mean())
