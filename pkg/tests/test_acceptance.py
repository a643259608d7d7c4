"""Acceptance gate: one test per criterion, each printing a PASS line once its
stated tolerance holds (run with -s to see the lines)."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from obbkit import (
    AxisAlignedBox,
    Detection,
    DetRecord,
    GroundTruthSet,
    GtInstance,
    Quadrilateral,
    RegressionTarget,
    RotatedBox,
    aabb_iou,
    canonicalize,
    decode,
    encode,
    evaluate,
    expected_max_iou,
    iou_smooth_l1_reg,
    nms,
    rnms,
    skew_iou,
    smooth_l1,
    tile_plan,
)
from obbkit.cli import _gradient_check_suite, main
from _oracles import grid_iou, random_boxes

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
HALF_PI = math.pi / 2


def ok(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


def test_skew_iou_oracle_suite():
    """10,000 random pairs vs grid-counting oracle, every error <= 2e-3, < 5 min."""
    rng = np.random.default_rng(12345)
    a_rows = random_boxes(rng, 10_000)
    b_rows = random_boxes(rng, 10_000)
    start = time.monotonic()
    worst = 0.0
    for ra, rb in zip(a_rows, b_rows):
        got = skew_iou(RotatedBox(*ra), RotatedBox(*rb))
        err = abs(got - grid_iou(ra, rb))
        worst = max(worst, err)
        assert err <= 2e-3
    elapsed = time.monotonic() - start
    assert elapsed < 300.0
    ok("skew-iou-oracle-suite", f"(n=10000 max_err={worst:.2e} time={elapsed:.1f}s)")


def test_analytic_iou_fixtures():
    square = canonicalize(RotatedBox(0, 0, 1, 1, 0.0))
    rotated = RotatedBox(0, 0, 1, 1, -math.pi / 4)
    assert skew_iou(square, rotated) == pytest.approx(0.707107, abs=1e-6)

    cross_a = RotatedBox(0, 0, 10, 2, 0.0)
    cross_b = RotatedBox(0, 0, 10, 2, -HALF_PI)
    assert skew_iou(cross_a, cross_b) == pytest.approx(1 / 9, abs=1e-9)

    rng = np.random.default_rng(1)
    for row in random_boxes(rng, 25):
        b = RotatedBox(*row)
        assert skew_iou(b, b) == 1.0
    ok("analytic-iou-fixtures")


def test_coding_round_trip():
    rng = np.random.default_rng(54321)
    gts = random_boxes(rng, 10_000)
    anchors = random_boxes(rng, 10_000)
    worst = 0.0
    for g_row, a_row in zip(gts, anchors):
        gt = RotatedBox(*g_row)
        anchor = RotatedBox(*a_row)
        back = decode(encode(gt, anchor), anchor)
        for got, want in (
            (back.cx, gt.cx), (back.cy, gt.cy), (back.w, gt.w), (back.h, gt.h), (back.theta, gt.theta),
        ):
            err = abs(got - want)
            worst = max(worst, err)
            assert err <= 1e-9
    ok("coding-round-trip", f"(n=10000 max_err={worst:.1e})")


def test_boundary_loss_discontinuity_removed():
    """Boundary-equivalent pairs: IoU-rescaled loss ~0 while plain smooth L1 > 0.5."""
    rng = np.random.default_rng(999)
    checked = 0
    for row in random_boxes(rng, 100):
        cx, cy, w, h, theta = row
        gt = RotatedBox(cx, cy, w, h, theta)
        pred = RotatedBox(cx, cy, h, w, theta + HALF_PI)  # same point set
        assert skew_iou(pred, gt) >= 1 - 1e-9

        anchor = RotatedBox(cx, cy, (w + h) / 2, (w + h) / 2, -0.5)
        pred_t = encode(pred, anchor)
        gt_t = encode(gt, anchor)
        plain = sum(smooth_l1(p - g) for p, g in zip(pred_t.as_tuple(), gt_t.as_tuple()))
        assert plain > 0.5

        value, _ = iou_smooth_l1_reg(pred_t, gt_t, pred, gt)
        assert value <= 1e-6
        checked += 1
    assert checked == 100
    ok("boundary-loss", "(n=100 pairs)")


def test_gradient_check():
    """200 regression cases x 5 coordinates = 1000 non-kink points, plus attention."""
    worst = _gradient_check_suite(n_cases=200, seed=42)
    assert worst <= 1e-4
    ok("gradient-check", f"(max_rel_err={worst:.2e})")


def test_emo_monotonicity():
    start = time.monotonic()
    strides = (4, 6, 8, 12, 16)
    values = [expected_max_iou(16, 16, 16, 16, s, samples=32) for s in strides]
    elapsed = time.monotonic() - start
    for a, b in zip(values, values[1:]):
        assert a > b  # strictly decreasing
    assert elapsed < 10.0
    ok("emo-monotonicity", f"(values={[f'{v:.4f}' for v in values]} time={elapsed:.2f}s)")


def _random_detections(rng, n):
    dets = []
    for _ in range(n):
        x, y = rng.uniform(0, 50, 2)
        w, h = rng.uniform(2, 25, 2)
        score = round(float(rng.uniform(0, 1)), 3)
        dets.append(Detection(AxisAlignedBox(x, y, x + w, y + h), score, "c", "img"))
    return dets


def test_nms_properties():
    rng = np.random.default_rng(777)
    for _ in range(1000):
        dets = _random_detections(rng, 10)
        thresh = float(rng.uniform(0.1, 0.7))
        kept = nms(dets, thresh)
        for i, a in enumerate(kept):
            for b in kept[i + 1 :]:
                assert aabb_iou(a.box, b.box) <= thresh
        for d in dets:
            if d in kept:
                continue
            assert any(aabb_iou(d.box, k.box) > thresh and k.score >= d.score for k in kept)

        # rotated NMS on the axis-aligned equivalents matches exactly
        rdets = [
            Detection(
                RotatedBox(
                    (d.box.xmin + d.box.xmax) / 2, (d.box.ymin + d.box.ymax) / 2,
                    d.box.ymax - d.box.ymin, d.box.xmax - d.box.xmin, -HALF_PI,
                ),
                d.score, d.category, d.image_id,
            )
            for d in dets
        ]
        kept_r = rnms(rdets, {"c": thresh})
        assert [d.score for d in kept_r] == [d.score for d in kept]
    ok("nms-properties", "(n=1000 sets)")


def test_evaluation_micro_oracle():
    quad = lambda x0, y0, x1, y1: Quadrilateral(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))
    gt = GroundTruthSet(
        {
            "img1": [
                GtInstance(quad(0, 0, 10, 10), "widget", False),
                GtInstance(quad(50, 50, 70, 60), "widget", False),
            ]
        }
    )
    dets = {
        "widget": [
            DetRecord("img1", 0.9, quad(0, 0, 10, 10)),
            DetRecord("img1", 0.8, quad(100, 100, 105, 105)),
            DetRecord("img1", 0.7, quad(50, 50, 70, 60)),
        ]
    }
    cont = evaluate(gt, dets, ["widget"], 0.5, "obb", "continuous").mean_ap
    voc = evaluate(gt, dets, ["widget"], 0.5, "obb", "voc07").mean_ap
    assert cont == pytest.approx(0.8333, abs=1e-4)
    assert voc == pytest.approx(0.8485, abs=1e-4)

    perfect = {
        "widget": [
            DetRecord("img1", 0.9, quad(0, 0, 10, 10)),
            DetRecord("img1", 0.8, quad(50, 50, 70, 60)),
        ]
    }
    assert evaluate(gt, perfect, ["widget"], 0.5, "obb", "voc07").mean_ap == 1.0

    assert len(tile_plan(1000, 1000, 800, 200)) == 4
    ok("evaluation-micro-oracle", f"(continuous={cont:.4f} voc07={voc:.4f})")


def test_cli_determinism(tmp_path, capsys):
    blobs = []
    for name in ("one", "two"):
        out_dir = tmp_path / name
        code = main(
            [
                "eval",
                "--gt-dir", str(FIXTURES / "synth" / "gt"),
                "--det-dir", str(FIXTURES / "synth" / "det_obb"),
                "--classes", f"@{FIXTURES / 'synth' / 'classes.txt'}",
                "--task", "obb",
                "--out", str(out_dir),
                "--no-figures",
            ]
        )
        assert code == 0
        blobs.append((out_dir / "report.json").read_bytes())
    capsys.readouterr()
    assert blobs[0] == blobs[1]
    assert json.loads(blobs[0])["mAP"] == 1.0
    ok("cli-determinism", "(byte-identical report.json, mAP=1.0)")
