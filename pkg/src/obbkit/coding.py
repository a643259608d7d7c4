"""Offset coding between anchors and rotated boxes.

encode/decode operate on the raw five parameters as supplied: no angle
canonicalization happens here, so parameterizations across the angle boundary
stay visible to the loss (that discontinuity is handled there, not hidden in
the coder).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import RotatedBox

# exp(tw) overflows float range long before this; treat it as a bad regression
MAX_LOG_RATIO = 50.0


@dataclass(frozen=True)
class RegressionTarget:
    """Five regression offsets: normalized center shift, log size ratios, raw angle delta."""

    tx: float
    ty: float
    tw: float
    th: float
    ttheta: float

    def __post_init__(self) -> None:
        for v in (self.tx, self.ty, self.tw, self.th, self.ttheta):
            if not math.isfinite(v):
                raise ValueError(f"RegressionTarget: non-finite component {v!r}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.tx, self.ty, self.tw, self.th, self.ttheta)


def encode(gt: RotatedBox, anchor: RotatedBox) -> RegressionTarget:
    """Offsets that regress `anchor` onto `gt` (raw parameters, radians)."""
    return RegressionTarget(
        tx=(gt.cx - anchor.cx) / anchor.w,
        ty=(gt.cy - anchor.cy) / anchor.h,
        tw=math.log(gt.w / anchor.w),
        th=math.log(gt.h / anchor.h),
        ttheta=gt.theta - anchor.theta,
    )


def decode(t: RegressionTarget, anchor: RotatedBox) -> RotatedBox:
    """Exact algebraic inverse of encode."""
    if abs(t.tw) > MAX_LOG_RATIO or abs(t.th) > MAX_LOG_RATIO:
        raise ValueError(f"decode: log size ratio out of range (tw={t.tw}, th={t.th})")
    return RotatedBox(
        cx=t.tx * anchor.w + anchor.cx,
        cy=t.ty * anchor.h + anchor.cy,
        w=anchor.w * math.exp(t.tw),
        h=anchor.h * math.exp(t.th),
        theta=t.ttheta + anchor.theta,
    )
