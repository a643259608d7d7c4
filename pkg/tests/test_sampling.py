import math

import numpy as np
import pytest

from obbkit import (
    AnchorSpec,
    AxisAlignedBox,
    assign_labels,
    expected_max_iou,
    generate_anchors,
)
from obbkit.sampling import DEFAULT_RATIOS, DEFAULT_SCALES, IGNORE, NEGATIVE, POSITIVE


class TestGenerateAnchors:
    def test_single_cell_single_shape(self):
        spec = AnchorSpec(stride=6, base_size=256, scales=(1.0,), ratios=(1.0,))
        got = generate_anchors(1, 1, spec)
        assert len(got) == 1
        box = got.anchors[0].box
        assert (box.xmin + box.xmax) / 2 == pytest.approx(3.0)
        assert (box.ymin + box.ymax) / 2 == pytest.approx(3.0)
        assert box.xmax - box.xmin == pytest.approx(256.0)
        assert box.ymax - box.ymin == pytest.approx(256.0)

    def test_48_anchors_per_location(self):
        spec = AnchorSpec(stride=6, base_size=256, scales=DEFAULT_SCALES, ratios=DEFAULT_RATIOS)
        assert len(DEFAULT_SCALES) == 6 and len(DEFAULT_RATIOS) == 8
        got = generate_anchors(1, 1, spec)
        assert len(got) == 48

    def test_quarter_ratio_shape(self):
        spec = AnchorSpec(stride=8, base_size=256, scales=(1.0,), ratios=(0.25,))
        box = generate_anchors(1, 1, spec).anchors[0].box
        assert box.xmax - box.xmin == pytest.approx(128.0)
        assert box.ymax - box.ymin == pytest.approx(512.0)

    def test_count_formula_and_lattice_centers(self):
        spec = AnchorSpec(stride=10, base_size=32, scales=(0.5, 1.0), ratios=(1.0, 2.0, 0.5))
        got = generate_anchors(3, 4, spec)
        assert len(got) == 3 * 4 * 2 * 3
        for a in got.anchors:
            cx = (a.box.xmin + a.box.xmax) / 2
            cy = (a.box.ymin + a.box.ymax) / 2
            assert cx == pytest.approx((a.col + 0.5) * 10)
            assert cy == pytest.approx((a.row + 0.5) * 10)

    def test_area_ratio_invariant(self):
        spec = AnchorSpec(stride=8, base_size=100, scales=(0.5,), ratios=DEFAULT_RATIOS)
        areas = [
            (a.box.xmax - a.box.xmin) * (a.box.ymax - a.box.ymin)
            for a in generate_anchors(1, 1, spec).anchors
        ]
        assert max(areas) - min(areas) <= 1e-6 * max(areas)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            AnchorSpec(stride=0, base_size=256, scales=(1.0,), ratios=(1.0,))
        with pytest.raises(ValueError):
            AnchorSpec(stride=8, base_size=256, scales=(), ratios=(1.0,))
        with pytest.raises(ValueError):
            generate_anchors(0, 4, AnchorSpec(stride=8, base_size=1, scales=(1.0,), ratios=(1.0,)))


class TestAssignLabels:
    def test_exact_match_positive(self):
        anchors = [AxisAlignedBox(0, 0, 10, 10), AxisAlignedBox(50, 50, 60, 60)]
        gts = [AxisAlignedBox(0, 0, 10, 10)]
        got = assign_labels(anchors, gts, 0.7, 0.3)
        assert got.labels[0] == POSITIVE
        assert got.matched_gt[0] == 0
        assert got.labels[1] == NEGATIVE

    def test_argmax_forced_positive_even_when_far(self):
        anchors = [AxisAlignedBox(0, 0, 100, 100), AxisAlignedBox(200, 0, 300, 100)]
        gts = [AxisAlignedBox(10, 10, 12, 12)]  # tiny: IoU ~ 4e-4 with anchor 0
        got = assign_labels(anchors, gts, 0.7, 0.3)
        assert got.labels[0] == POSITIVE
        assert got.matched_gt[0] == 0

    def test_between_thresholds_is_ignore(self):
        # IoU 0.5 with the gt, another anchor is the argmax
        anchors = [AxisAlignedBox(0, 0, 10, 10), AxisAlignedBox(0, 0, 10, 20)]
        gts = [AxisAlignedBox(0, 0, 10, 20)]
        got = assign_labels(anchors, gts, 0.7, 0.3)
        assert got.labels[1] == POSITIVE
        assert got.labels[0] == IGNORE

    def test_empty_gts_all_negative(self):
        anchors = [AxisAlignedBox(0, 0, 10, 10)]
        got = assign_labels(anchors, [], 0.7, 0.3)
        assert (got.labels == NEGATIVE).all()
        assert (got.matched_gt == -1).all()

    def test_every_gt_covered(self):
        rng = np.random.default_rng(12)
        spec = AnchorSpec(stride=16, base_size=32, scales=(0.5, 1.0), ratios=(1.0, 2.0))
        anchor_set = generate_anchors(8, 8, spec)
        for _ in range(10):
            gts = []
            for _ in range(5):
                x, y = rng.uniform(0, 100, 2)
                w, h = rng.uniform(4, 60, 2)
                gts.append(AxisAlignedBox(x, y, x + w, y + h))
            got = assign_labels(anchor_set, gts, 0.7, 0.3)
            covered = set(got.matched_gt[got.labels == POSITIVE])
            assert covered == set(range(len(gts)))

    def test_bad_thresholds(self):
        anchors = [AxisAlignedBox(0, 0, 1, 1)]
        with pytest.raises(ValueError):
            assign_labels(anchors, [], 0.3, 0.7)


class TestExpectedMaxIou:
    def test_tiny_stride_approaches_one(self):
        got = expected_max_iou(16, 16, 16, 16, stride=0.01, samples=16)
        assert got > 0.998

    def test_matched_shapes_monotone_in_stride(self):
        strides = (4, 6, 8, 10, 12, 14, 16)
        vals = [expected_max_iou(16, 16, 16, 16, s, samples=32) for s in strides]
        for a, b in zip(vals, vals[1:]):
            assert a >= b

    def test_smaller_stride_scores_higher(self):
        assert expected_max_iou(16, 16, 16, 16, 16) < expected_max_iou(16, 16, 16, 16, 8)

    def test_lattice_point_gives_perfect_iou(self):
        # with a 1x1 sampling grid the object center is at the cell midpoint,
        # exactly on an anchor center
        got = expected_max_iou(16, 16, 16, 16, stride=8, samples=1)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_mismatched_anchor_bounded_by_shape_iou(self):
        # object 16x16 vs anchor 32x32: even perfect alignment caps IoU at 1/4
        got = expected_max_iou(16, 16, 32, 32, stride=1, samples=8)
        assert got <= 0.25 + 1e-9
        assert got > 0.2

    def test_validation(self):
        with pytest.raises(ValueError):
            expected_max_iou(0, 16, 16, 16, 8)
        with pytest.raises(ValueError):
            expected_max_iou(16, 16, 16, 16, 8, samples=0)
