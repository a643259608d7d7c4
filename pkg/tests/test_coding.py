import math

import numpy as np
import pytest

from obbkit import RegressionTarget, RotatedBox, canonicalize, decode, encode, skew_iou
from _oracles import random_boxes

HALF_PI = math.pi / 2


def random_pair(rng):
    gt = RotatedBox(*random_boxes(rng, 1)[0])
    anchor = RotatedBox(*random_boxes(rng, 1)[0])
    return gt, anchor


class TestEncode:
    def test_identity(self):
        b = RotatedBox(3, 4, 5, 6, -0.7)
        assert encode(b, b).as_tuple() == (0, 0, 0, 0, 0)

    def test_direct_substitution(self):
        gt = RotatedBox(12, 8, 20, 10, -0.5)
        anchor = RotatedBox(10, 10, 10, 10, -0.5)
        t = encode(gt, anchor)
        assert t.tx == pytest.approx(0.2, abs=1e-12)
        assert t.ty == pytest.approx(-0.2, abs=1e-12)
        assert t.tw == pytest.approx(math.log(2), abs=1e-12)
        assert t.th == pytest.approx(0.0, abs=1e-12)
        assert t.ttheta == pytest.approx(0.0, abs=1e-12)

    def test_angle_boundary_offset_is_raw(self):
        # raw parameter distance stays visible across the angle boundary
        gt = RotatedBox(0, 0, 10, 4, -HALF_PI + 0.01)
        anchor = RotatedBox(0, 0, 10, 4, -0.01)
        t = encode(gt, anchor)
        assert t.ttheta == pytest.approx(-HALF_PI + 0.02, abs=1e-12)

    def test_boundary_pathology_quantified(self):
        # almost the same footprint, sides swapped across the quarter-turn
        # boundary: near-unit IoU but an offset vector with L2 norm > 1
        gt = RotatedBox(0, 0, 10, 4, -HALF_PI + 0.01)
        anchor = RotatedBox(0, 0, 4, 10, 0.012)
        assert skew_iou(canonicalize(gt), canonicalize(anchor)) >= 0.99
        t = encode(gt, anchor)
        norm = math.sqrt(sum(v * v for v in t.as_tuple()))
        assert norm > 1.0

    def test_rejects_bad_anchor(self):
        with pytest.raises(ValueError):
            RotatedBox(0, 0, 0.0, 10, 0.0)

    def test_translation_covariant(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            gt, anchor = random_pair(rng)
            dx, dy = rng.uniform(-100, 100, 2)
            moved_gt = RotatedBox(gt.cx + dx, gt.cy + dy, gt.w, gt.h, gt.theta)
            moved_anchor = RotatedBox(anchor.cx + dx, anchor.cy + dy, anchor.w, anchor.h, anchor.theta)
            t0 = encode(gt, anchor)
            t1 = encode(moved_gt, moved_anchor)
            assert np.allclose(t0.as_tuple(), t1.as_tuple(), atol=1e-9)

    def test_scale_covariant(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            gt, anchor = random_pair(rng)
            s = rng.uniform(0.1, 10)
            scaled_gt = RotatedBox(gt.cx * s, gt.cy * s, gt.w * s, gt.h * s, gt.theta)
            scaled_anchor = RotatedBox(anchor.cx * s, anchor.cy * s, anchor.w * s, anchor.h * s, anchor.theta)
            t0 = encode(gt, anchor)
            t1 = encode(scaled_gt, scaled_anchor)
            assert np.allclose(t0.as_tuple(), t1.as_tuple(), atol=1e-9, rtol=1e-9)


class TestDecode:
    def test_zero_target_returns_anchor(self):
        a = RotatedBox(1, 2, 3, 4, -1.0)
        got = decode(RegressionTarget(0, 0, 0, 0, 0), a)
        assert got == a

    def test_round_trip_random(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            gt, anchor = random_pair(rng)
            back = decode(encode(gt, anchor), anchor)
            assert back.cx == pytest.approx(gt.cx, abs=1e-9)
            assert back.cy == pytest.approx(gt.cy, abs=1e-9)
            assert back.w == pytest.approx(gt.w, abs=1e-9)
            assert back.h == pytest.approx(gt.h, abs=1e-9)
            assert back.theta == pytest.approx(gt.theta, abs=1e-9)

    def test_inverse_of_worked_example(self):
        got = decode(
            RegressionTarget(0.2, -0.2, math.log(2), 0, 0), RotatedBox(10, 10, 10, 10, -0.5)
        )
        assert (got.cx, got.cy, got.w, got.h, got.theta) == pytest.approx(
            (12, 8, 20, 10, -0.5), abs=1e-12
        )

    def test_overflow_rejected(self):
        a = RotatedBox(0, 0, 1, 1, -0.5)
        with pytest.raises(ValueError, match="out of range"):
            decode(RegressionTarget(0, 0, 60.0, 0, 0), a)
        with pytest.raises(ValueError, match="out of range"):
            decode(RegressionTarget(0, 0, 0, -51.0, 0), a)

    def test_non_finite_target_rejected(self):
        with pytest.raises(ValueError):
            RegressionTarget(math.inf, 0, 0, 0, 0)
