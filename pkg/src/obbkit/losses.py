"""Multi-task detection loss: IoU-rescaled smooth L1 regression, pixel
attention cross-entropy, classification cross-entropy, and their weighted sum.

The regression term replaces each nonzero smooth-L1 component by the constant
|-log(IoU)| of the decoded prediction against its ground-truth box, so
geometrically perfect predictions cost ~0 even when their raw five-parameter
offsets are far apart (the angle-boundary case).  Gradients treat the
1/|L_reg| and |-log(IoU)| factors as detached constants: the propagated
gradient is the smooth-L1 direction rescaled to the IoU magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .coding import RegressionTarget
from .geometry import RotatedBox, skew_iou

# IoU is clamped here before the log; disjoint pred/gt pairs are common early on.
IOU_CLAMP_MIN = 1e-10
PROB_CLAMP_MIN = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Trade-off weights for the regression / attention / classification terms."""

    lambda1: float = 4.0
    lambda2: float = 1.0
    lambda3: float = 2.0

    def __post_init__(self) -> None:
        for v in (self.lambda1, self.lambda2, self.lambda3):
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"LossWeights must be finite and non-negative, got {v}")


@dataclass(frozen=True)
class Proposal:
    """One scored region: offsets and boxes are None for background entries."""

    foreground: bool
    label: int
    probs: tuple[float, ...]
    pred_offsets: RegressionTarget | None = None
    target_offsets: RegressionTarget | None = None
    pred_box: RotatedBox | None = None
    gt_box: RotatedBox | None = None

    def __post_init__(self) -> None:
        if abs(sum(self.probs) - 1.0) > 1e-6:
            raise ValueError(f"Proposal: probabilities sum to {sum(self.probs)}, not 1")
        if self.foreground:
            missing = [
                f
                for f, v in (
                    ("pred_offsets", self.pred_offsets),
                    ("target_offsets", self.target_offsets),
                    ("pred_box", self.pred_box),
                    ("gt_box", self.gt_box),
                )
                if v is None
            ]
            if missing:
                raise ValueError(f"foreground proposal missing {missing}")


@dataclass(frozen=True)
class ProposalBatch:
    proposals: tuple[Proposal, ...]

    def __len__(self) -> int:
        return len(self.proposals)


def smooth_l1(x: float) -> float:
    """0.5 x^2 inside the unit interval, |x| - 0.5 outside."""
    ax = abs(x)
    if ax < 1.0:
        return 0.5 * x * x
    return ax - 0.5


def smooth_l1_grad(x: float) -> float:
    ax = abs(x)
    if ax < 1.0:
        return x
    return math.copysign(1.0, x)


def iou_smooth_l1_reg(
    pred_t: RegressionTarget,
    tgt_t: RegressionTarget,
    pred_box: RotatedBox,
    gt_box: RotatedBox,
) -> tuple[float, tuple[float, float, float, float, float]]:
    """Regression loss value and its five gradients w.r.t. the predicted offsets.

    value = sum_j sign(L_j) * |-log IoU| where L_j = smooth_l1(pred_j - tgt_j)
    and sign(L_j) is L_j / |L_j| with 0/0 defined as 0.  Since smooth L1 is
    non-negative, every nonzero component contributes exactly |-log IoU|.
    Gradients hold 1/|L_j| and |-log IoU| fixed at the evaluation point.
    """
    iou = skew_iou(pred_box, gt_box)
    magnitude = abs(-math.log(min(max(iou, IOU_CLAMP_MIN), 1.0)))

    value = 0.0
    grads = []
    for pj, tj in zip(pred_t.as_tuple(), tgt_t.as_tuple()):
        d = pj - tj
        loss_j = smooth_l1(d)
        if loss_j == 0.0:
            grads.append(0.0)
            continue
        value += magnitude
        grads.append(smooth_l1_grad(d) / loss_j * magnitude)
    return value, tuple(grads)


def attention_loss(saliency: np.ndarray, mask: np.ndarray) -> float:
    """Mean pixel-wise softmax cross-entropy of a 2-channel grid against a 0/1 mask."""
    s, m = _check_attention_inputs(saliency, mask)
    lse = np.logaddexp(s[..., 0], s[..., 1])
    picked = np.where(m == 1, s[..., 1], s[..., 0])
    return float(np.mean(lse - picked))


def attention_loss_with_grad(saliency: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """attention_loss plus its gradient w.r.t. every logit: (softmax - onehot) / (h*w)."""
    s, m = _check_attention_inputs(saliency, mask)
    lse = np.logaddexp(s[..., 0], s[..., 1])
    picked = np.where(m == 1, s[..., 1], s[..., 0])
    value = float(np.mean(lse - picked))

    soft = np.exp(s - lse[..., None])
    onehot = np.stack([(m == 0), (m == 1)], axis=-1).astype(float)
    grad = (soft - onehot) / m.size
    return value, grad


def _check_attention_inputs(saliency: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(saliency, dtype=float)
    m = np.asarray(mask)
    if s.ndim != 3 or s.shape[-1] != 2:
        raise ValueError(f"saliency must be h x w x 2, got {s.shape}")
    if m.shape != s.shape[:2]:
        raise ValueError(f"mask shape {m.shape} does not match saliency {s.shape[:2]}")
    if not np.isfinite(s).all():
        raise ValueError("saliency contains non-finite logits")
    if not np.isin(m, (0, 1)).all():
        raise ValueError("mask values must be exactly 0 or 1")
    return s, m


def classification_loss(probs: Sequence[float], label: int) -> float:
    """Cross-entropy -log p[label] with the probability clamped away from zero."""
    if not 0 <= label < len(probs):
        raise ValueError(f"label {label} out of range for {len(probs)} classes")
    if abs(sum(probs) - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {sum(probs)}, not 1")
    return -math.log(max(probs[label], PROB_CLAMP_MIN))


def multitask_loss(
    batch: ProposalBatch,
    saliency: np.ndarray,
    mask: np.ndarray,
    weights: LossWeights = LossWeights(),
) -> float:
    """Weighted combination of the three terms over a proposal batch.

    Background proposals contribute classification only; the attention term is
    already averaged over pixels, so its weight applies directly.
    """
    n = len(batch)
    if n == 0:
        raise ValueError("multitask_loss needs at least one proposal")

    reg_sum = 0.0
    cls_sum = 0.0
    for p in batch.proposals:
        if p.foreground:
            value, _ = iou_smooth_l1_reg(p.pred_offsets, p.target_offsets, p.pred_box, p.gt_box)
            reg_sum += value
        cls_sum += classification_loss(p.probs, p.label)

    att = attention_loss(saliency, mask)
    return weights.lambda1 / n * reg_sum + weights.lambda2 * att + weights.lambda3 / n * cls_sum


def numerical_gradient(
    f: Callable[[Sequence[float]], float], x: Sequence[float], eps: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of a scalar function; verification oracle."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for j in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[j] += eps
        lo[j] -= eps
        grad[j] = (f(hi) - f(lo)) / (2.0 * eps)
    return grad
