"""Binary supervision masks for the pixel attention loss.

A grid cell is labeled foreground when its center point, mapped back to image
coordinates through the downscale factor, falls inside (or on the boundary of)
any ground-truth box polygon.  Center sampling keeps the rule deterministic
and consistent across resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import CLIP_EPS, RotatedBox, rbox_to_quad


@dataclass(frozen=True)
class MaskGrid:
    rows: int
    cols: int
    downscale: float
    values: np.ndarray  # rows x cols of {0,1}, uint8

    def foreground_count(self) -> int:
        return int(self.values.sum())


def rasterize_mask(gts: Sequence[RotatedBox], rows: int, cols: int, downscale: float) -> MaskGrid:
    """Binary mask of cells whose centers lie inside any ground-truth polygon."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if downscale <= 0:
        raise ValueError("downscale must be positive")

    xs = (np.arange(cols) + 0.5) * downscale
    ys = (np.arange(rows) + 0.5) * downscale
    gx, gy = np.meshgrid(xs, ys)  # rows x cols
    values = np.zeros((rows, cols), dtype=bool)
    for box in gts:
        corners = rbox_to_quad(box).vertices
        inside = np.ones((rows, cols), dtype=bool)
        for k in range(4):
            x0, y0 = corners[k]
            x1, y1 = corners[(k + 1) % 4]
            inside &= (x1 - x0) * (gy - y0) - (y1 - y0) * (gx - x0) >= -CLIP_EPS
        values |= inside
    return MaskGrid(rows, cols, downscale, values.astype(np.uint8))


def mask_to_pgm(mask: MaskGrid) -> str:
    """Plain-text PGM (P2, maxval 1) for visual inspection."""
    lines = ["P2", f"{mask.cols} {mask.rows}", "1"]
    for row in mask.values:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"
