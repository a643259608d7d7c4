"""Command-line surface.

Subcommands: iou, eval, anchors, tile, nms, rnms, mask, losscheck, encode,
decode, loss.  Angles are read and written in degrees unless --radians is
given; all numeric output uses fixed-decimal formatting (--precision digits,
default 6) with \\n line endings so runs are byte-for-byte reproducible.

Exit codes: 0 success, 1 internal error, 2 input validation error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import attention, coding, evaluation, losses, postprocess, reports, sampling
from .geometry import AxisAlignedBox, RotatedBox, skew_iou


def _fmt(value: float, precision: int) -> str:
    return f"{value:.{precision}f}"


def _read_rows(path: str, n_fields: int) -> list[list[float]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if len(tokens) != n_fields:
                raise ValueError(f"{path}:{lineno}: expected {n_fields} fields, got {len(tokens)}")
            try:
                rows.append([float(t) for t in tokens])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unparseable number") from None
    return rows


def _angle_in(value: float, degrees: bool) -> float:
    return math.radians(value) if degrees else value


def _angle_out(value: float, degrees: bool) -> float:
    return math.degrees(value) if degrees else value


def _rbox(fields: list[float], degrees: bool) -> RotatedBox:
    cx, cy, w, h, theta = fields
    return RotatedBox(cx, cy, w, h, _angle_in(theta, degrees))


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_iou(args: argparse.Namespace) -> int:
    lines = []
    for row in _read_rows(args.pairs, 10):
        a = _rbox(row[:5], args.degrees)
        b = _rbox(row[5:], args.degrees)
        lines.append(_fmt(skew_iou(a, b), args.precision))
    _write("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    lines = []
    for row in _read_rows(args.pairs, 10):
        gt = _rbox(row[:5], args.degrees)
        anchor = _rbox(row[5:], args.degrees)
        t = coding.encode(gt, anchor)
        out = (t.tx, t.ty, t.tw, t.th, _angle_out(t.ttheta, args.degrees))
        lines.append(" ".join(_fmt(v, args.precision) for v in out))
    _write("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    lines = []
    for row in _read_rows(args.pairs, 10):
        t = coding.RegressionTarget(
            row[0], row[1], row[2], row[3], _angle_in(row[4], args.degrees)
        )
        anchor = _rbox(row[5:], args.degrees)
        box = coding.decode(t, anchor)
        out = (box.cx, box.cy, box.w, box.h, _angle_out(box.theta, args.degrees))
        lines.append(" ".join(_fmt(v, args.precision) for v in out))
    _write("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def cmd_tile(args: argparse.Namespace) -> int:
    plan = evaluation.tile_plan(args.width, args.height, args.tile, args.overlap)
    lines = [f"{x0} {y0} {x1} {y1}" for x0, y0, x1, y1 in plan.windows]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _parse_thresholds(default: float, overrides: str | None) -> dict[str, float]:
    per_cat: dict[str, float] = {}
    if overrides:
        for item in overrides.split(","):
            if "=" not in item:
                raise ValueError(f"bad threshold override {item!r}, expected cat=value")
            cat, value = item.split("=", 1)
            per_cat[cat.strip()] = float(value)
    per_cat["*"] = default
    return per_cat


class _ThresholdMap(dict):
    """Per-category thresholds with a '*' fallback."""

    def __contains__(self, key) -> bool:  # noqa: D105
        return True

    def __getitem__(self, key):
        if dict.__contains__(self, key):
            return dict.get(self, key)
        return dict.get(self, "*")


def cmd_nms(args: argparse.Namespace) -> int:
    dets = []
    with open(args.dets, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if len(tokens) != 7:
                raise ValueError(f"{args.dets}:{lineno}: expected 7 fields, got {len(tokens)}")
            image_id, category = tokens[0], tokens[1]
            score, x0, y0, x1, y1 = (float(t) for t in tokens[2:])
            dets.append(
                postprocess.Detection(AxisAlignedBox(x0, y0, x1, y1), score, category, image_id)
            )
    kept = postprocess.nms(dets, args.thresh)
    p = args.precision
    lines = [
        f"{d.image_id} {d.category} {_fmt(d.score, p)} "
        f"{_fmt(d.box.xmin, p)} {_fmt(d.box.ymin, p)} {_fmt(d.box.xmax, p)} {_fmt(d.box.ymax, p)}"
        for d in kept
    ]
    _write("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def cmd_rnms(args: argparse.Namespace) -> int:
    dets = []
    with open(args.dets, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if len(tokens) != 8:
                raise ValueError(f"{args.dets}:{lineno}: expected 8 fields, got {len(tokens)}")
            image_id, category = tokens[0], tokens[1]
            score = float(tokens[2])
            box = _rbox([float(t) for t in tokens[3:]], args.degrees)
            dets.append(postprocess.Detection(box, score, category, image_id))
    thresholds = _ThresholdMap(_parse_thresholds(args.thresh, args.thresh_per_cat))
    kept = postprocess.rnms(dets, thresholds)
    p = args.precision
    lines = [
        f"{d.image_id} {d.category} {_fmt(d.score, p)} "
        f"{_fmt(d.box.cx, p)} {_fmt(d.box.cy, p)} {_fmt(d.box.w, p)} {_fmt(d.box.h, p)} "
        f"{_fmt(_angle_out(d.box.theta, args.degrees), p)}"
        for d in kept
    ]
    _write("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def cmd_mask(args: argparse.Namespace) -> int:
    boxes = [_rbox(row, args.degrees) for row in _read_rows(args.boxes, 5)] if args.boxes else []
    grid = attention.rasterize_mask(boxes, args.rows, args.cols, args.downscale)
    _write(attention.mask_to_pgm(grid), args.out)
    return 0


def cmd_anchors(args: argparse.Namespace) -> int:
    strides = [float(s) for s in args.strides.split(",")]
    anchor_w = args.anchor_w if args.anchor_w is not None else args.obj_w
    anchor_h = args.anchor_h if args.anchor_h is not None else args.obj_h
    rows = [
        (s, sampling.expected_max_iou(args.obj_w, args.obj_h, anchor_w, anchor_h, s, args.samples))
        for s in strides
    ]
    _write(reports.emo_csv(rows), args.out)

    if args.dump_anchors:
        spec = sampling.AnchorSpec(
            stride=strides[0],
            base_size=args.base_size,
            scales=tuple(float(s) for s in args.scales.split(",")),
            ratios=tuple(float(r) for r in args.ratios.split(",")),
        )
        anchor_set = sampling.generate_anchors(args.rows, args.cols, spec)
        p = args.precision
        lines = [
            f"{a.row} {a.col} {a.scale_index} {a.ratio_index} "
            f"{_fmt(a.box.xmin, p)} {_fmt(a.box.ymin, p)} {_fmt(a.box.xmax, p)} {_fmt(a.box.ymax, p)}"
            for a in anchor_set.anchors
        ]
        Path(args.dump_anchors).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if args.plot:
        reports.render_emo_figure(rows, args.plot)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    classes = _load_classes(args.classes)
    gt = evaluation.load_ground_truth(args.gt_dir)
    detections = evaluation.load_detections(args.det_dir, classes, args.task)
    report = evaluation.evaluate(
        gt,
        detections,
        classes,
        iou_thresh=args.iou_thresh,
        task=args.task,
        metric=args.metric,
        jobs=args.jobs,
    )
    reports.write_report(report, args.out, figures=not args.no_figures)
    sys.stdout.write(reports.report_table(report))
    return 0


def _load_classes(spec: str) -> list[str]:
    if spec.startswith("@"):
        path = Path(spec[1:])
        if not path.is_file():
            raise ValueError(f"class list file not found: {path}")
        return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if spec == "dota":
        return list(evaluation.DOTA_CLASSES)
    return [c.strip() for c in spec.split(",") if c.strip()]


def cmd_loss(args: argparse.Namespace) -> int:
    lines = []
    for row in _read_rows(args.rows, 20):
        pred_t = coding.RegressionTarget(
            row[0], row[1], row[2], row[3], _angle_in(row[4], args.degrees)
        )
        tgt_t = coding.RegressionTarget(
            row[5], row[6], row[7], row[8], _angle_in(row[9], args.degrees)
        )
        pred_box = _rbox(row[10:15], args.degrees)
        gt_box = _rbox(row[15:20], args.degrees)
        value, grads = losses.iou_smooth_l1_reg(pred_t, tgt_t, pred_box, gt_box)
        lines.append(" ".join(_fmt(v, args.precision) for v in (value, *grads)))
    _write("\n".join(lines) + "\n" if lines else "", args.out)
    return 0


def cmd_losscheck(args: argparse.Namespace) -> int:
    max_err = _gradient_check_suite()
    sys.stdout.write(f"max rel err = {max_err:.3e}\n")
    if max_err <= 1e-4:
        sys.stdout.write("PASS (max rel err <= 1e-4)\n")
        return 0
    sys.stdout.write("FAIL (max rel err > 1e-4)\n")
    return 1


def _gradient_check_suite(n_cases: int = 200, seed: int = 0) -> float:
    """Finite-difference check of the regression and attention gradients."""
    rng = np.random.default_rng(seed)
    worst = 0.0

    for _ in range(n_cases):
        anchor = RotatedBox(0.0, 0.0, 10.0, 6.0, -0.5)
        gt = RotatedBox(
            rng.uniform(-3, 3), rng.uniform(-3, 3),
            rng.uniform(4, 16), rng.uniform(4, 16), rng.uniform(-math.pi / 2, 0)
        )
        tgt = coding.encode(gt, anchor)
        # keep every offset away from the smooth-L1 kinks at 0 and +-1
        deltas = rng.uniform(0.05, 0.8, size=5) * rng.choice([-1.0, 1.0], size=5)
        pred = coding.RegressionTarget(*(t + d for t, d in zip(tgt.as_tuple(), deltas)))
        pred_box = coding.decode(pred, anchor)
        _, grads = losses.iou_smooth_l1_reg(pred, tgt, pred_box, gt)

        # detached factors: same value surface the gradient contract promises
        iou = skew_iou(pred_box, gt)
        magnitude = abs(-math.log(min(max(iou, losses.IOU_CLAMP_MIN), 1.0)))
        scales = [
            magnitude / losses.smooth_l1(p - t) if losses.smooth_l1(p - t) != 0 else 0.0
            for p, t in zip(pred.as_tuple(), tgt.as_tuple())
        ]

        def frozen_value(x) -> float:
            return sum(
                losses.smooth_l1(xj - tj) * kj
                for xj, tj, kj in zip(x, tgt.as_tuple(), scales)
            )

        numeric = losses.numerical_gradient(frozen_value, pred.as_tuple(), eps=1e-6)
        for g, n in zip(grads, numeric):
            denom = max(abs(n), 1e-8)
            worst = max(worst, abs(g - n) / denom)

    for _ in range(20):
        logits = rng.normal(scale=2.0, size=(5, 7, 2))
        mask = rng.integers(0, 2, size=(5, 7))
        _, grad = losses.attention_loss_with_grad(logits, mask)
        flat = logits.reshape(-1)

        def att_value(x) -> float:
            return losses.attention_loss(np.asarray(x).reshape(5, 7, 2), mask)

        numeric = losses.numerical_gradient(att_value, flat, eps=1e-6)
        for g, n in zip(grad.reshape(-1), numeric):
            denom = max(abs(n), 1e-8)
            worst = max(worst, abs(g - n) / denom)
    return worst


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obbkit", description="Rotated-box detection toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        angle = p.add_mutually_exclusive_group()
        angle.add_argument(
            "--degrees", dest="degrees", action="store_true", default=True,
            help="angles in degrees (default)"
        )
        angle.add_argument(
            "--radians", dest="degrees", action="store_false", help="angles in radians"
        )
        p.add_argument("--precision", type=int, default=6, help="output decimal places")
        p.add_argument("--out", default=None, help="write output to a file instead of stdout")

    p = sub.add_parser("iou", help="skew IoU for box pairs")
    p.add_argument("pairs", help="file of lines: cx cy w h angle cx cy w h angle")
    common(p)
    p.set_defaults(func=cmd_iou)

    p = sub.add_parser("encode", help="regression offsets for (gt, anchor) pairs")
    p.add_argument("pairs", help="file of lines: gt(5) anchor(5)")
    common(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="boxes from (offsets, anchor) pairs")
    p.add_argument("pairs", help="file of lines: tx ty tw th ttheta anchor(5)")
    common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("tile", help="sliding-window plan for an image")
    p.add_argument("width", type=int)
    p.add_argument("height", type=int)
    p.add_argument("tile", type=int, nargs="?", default=evaluation.TILE_SIZE)
    p.add_argument("overlap", type=int, nargs="?", default=evaluation.TILE_OVERLAP)
    common(p)
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("nms", help="greedy NMS over horizontal detections")
    p.add_argument("dets", help="file of lines: image_id category score xmin ymin xmax ymax")
    p.add_argument("--thresh", type=float, default=0.5)
    common(p)
    p.set_defaults(func=cmd_nms)

    p = sub.add_parser("rnms", help="rotated NMS with per-category thresholds")
    p.add_argument("dets", help="file of lines: image_id category score cx cy w h angle")
    p.add_argument("--thresh", type=float, default=0.3, help="default threshold for all categories")
    p.add_argument("--thresh-per-cat", default=None, help="overrides, e.g. ship=0.2,plane=0.4")
    common(p)
    p.set_defaults(func=cmd_rnms)

    p = sub.add_parser("mask", help="binary attention mask as PGM (P2)")
    p.add_argument("boxes", nargs="?", default=None, help="file of lines: cx cy w h angle")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--downscale", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("anchors", help="EMO-vs-stride table and anchor dump")
    p.add_argument("--strides", default="4,6,8,10,12,14,16")
    p.add_argument("--obj-w", type=float, default=16.0)
    p.add_argument("--obj-h", type=float, default=16.0)
    p.add_argument("--anchor-w", type=float, default=None, help="defaults to obj-w")
    p.add_argument("--anchor-h", type=float, default=None, help="defaults to obj-h")
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--base-size", type=float, default=sampling.DEFAULT_BASE_SIZE)
    p.add_argument("--scales", default=",".join(str(s) for s in sampling.DEFAULT_SCALES))
    p.add_argument("--ratios", default=",".join(str(r) for r in sampling.DEFAULT_RATIOS))
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=4)
    p.add_argument("--dump-anchors", default=None, help="write the anchor lattice to a file")
    p.add_argument("--plot", default=None, help="write an EMO-vs-stride figure (PNG)")
    common(p)
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("eval", help="OBB/HBB mAP evaluation with report files")
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--det-dir", required=True)
    p.add_argument("--classes", required=True, help="comma list, @file, or 'dota'")
    p.add_argument("--task", choices=("obb", "hbb"), default="obb")
    p.add_argument("--metric", choices=("voc07", "continuous"), default="voc07")
    p.add_argument("--iou-thresh", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-figures", action="store_true", help="skip PR curve rendering")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_eval, degrees=True, precision=6)

    p = sub.add_parser("loss", help="IoU-rescaled regression loss values and gradients")
    p.add_argument("rows", help="file of lines: pred_t(5) tgt_t(5) pred_box(5) gt_box(5)")
    common(p)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("losscheck", help="finite-difference gradient verification")
    common(p)
    p.set_defaults(func=cmd_losscheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
