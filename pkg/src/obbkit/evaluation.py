"""Per-class AP / mAP evaluation for oriented and horizontal detection tasks,
window plans for tiling large images, and the delimited file formats.

Ground truth: one text file per image, lines
    x1 y1 x2 y2 x3 y3 x4 y4 category difficult
Detections: one file per class, Task1_<class>.txt (OBB) or Task2_<class>.txt
(HBB), lines
    image_id score x1 y1 x2 y2 x3 y3 x4 y4

Matching follows VOC semantics: greedy over detections in descending score,
one match per ground truth, difficult instances excluded from both the gt
count and false-positive penalties.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .geometry import (
    AxisAlignedBox,
    Quadrilateral,
    RotatedBox,
    aabb_iou,
    quad_to_rbox,
    skew_iou,
)

DOTA_CLASSES = (
    "plane",
    "baseball-diamond",
    "bridge",
    "ground-track-field",
    "small-vehicle",
    "large-vehicle",
    "ship",
    "tennis-court",
    "basketball-court",
    "storage-tank",
    "soccer-ball-field",
    "roundabout",
    "harbor",
    "swimming-pool",
    "helicopter",
)

TILE_SIZE = 800
TILE_OVERLAP = 200


@dataclass(frozen=True)
class GtInstance:
    quad: Quadrilateral
    category: str
    difficult: bool


@dataclass(frozen=True)
class GroundTruthSet:
    by_image: dict[str, list[GtInstance]]

    def categories(self) -> set[str]:
        return {inst.category for insts in self.by_image.values() for inst in insts}


@dataclass(frozen=True)
class DetRecord:
    image_id: str
    score: float
    quad: Quadrilateral


@dataclass(frozen=True)
class TilePlan:
    windows: list[tuple[int, int, int, int]]

    def __len__(self) -> int:
        return len(self.windows)


def _axis_starts(length: int, tile: int, step: int) -> list[int]:
    if length <= tile:
        return [0]
    starts = []
    s = 0
    while s + tile < length:
        starts.append(s)
        s += step
    starts.append(length - tile)
    return starts


def tile_plan(img_w: int, img_h: int, tile: int = TILE_SIZE, overlap: int = TILE_OVERLAP) -> TilePlan:
    """Sliding windows covering the image; the last window per axis is clamped
    to end at the image edge, and images smaller than the tile yield one
    full-image window."""
    if img_w <= 0 or img_h <= 0:
        raise ValueError("image dimensions must be positive")
    if not 0 <= overlap < tile:
        raise ValueError("need 0 <= overlap < tile")
    step = tile - overlap
    xs = _axis_starts(img_w, tile, step)
    ys = _axis_starts(img_h, tile, step)
    tw = min(tile, img_w)
    th = min(tile, img_h)
    return TilePlan([(x0, y0, x0 + tw, y0 + th) for y0 in ys for x0 in xs])


def _quad_to_aabb(quad: Quadrilateral) -> AxisAlignedBox:
    xs = [x for x, _ in quad.vertices]
    ys = [y for _, y in quad.vertices]
    return AxisAlignedBox(min(xs), min(ys), max(xs), max(ys))


def match_detections(
    dets: Sequence[DetRecord],
    gts_by_image: Mapping[str, Sequence[tuple[Quadrilateral, bool]]],
    iou_thresh: float,
    task: str = "obb",
) -> list[bool | None]:
    """Greedy TP/FP flags for one class; None marks ignored detections.

    `dets` must be sorted by descending score.  Each detection matches the
    unmatched non-difficult gt of its image with the highest IoU >= thresh
    (TP); failing that, a detection overlapping only difficult gts is ignored;
    everything else is FP.
    """
    if task not in ("obb", "hbb"):
        raise ValueError(f"task must be 'obb' or 'hbb', got {task!r}")

    # convert each image's gts once; detections convert on the fly
    converted: dict[str, list[tuple[object, bool, bool]]] = {}
    for image_id, gts in gts_by_image.items():
        entries = []
        for quad, difficult in gts:
            geom = quad_to_rbox(quad) if task == "obb" else _quad_to_aabb(quad)
            entries.append([geom, difficult, False])  # geometry, difficult, matched
        converted[image_id] = entries

    flags: list[bool | None] = []
    for det in dets:
        entries = converted.get(det.image_id, [])
        geom = quad_to_rbox(det.quad) if task == "obb" else _quad_to_aabb(det.quad)
        iou_of = skew_iou if task == "obb" else aabb_iou

        best_iou, best_entry = 0.0, None
        saw_difficult = False
        for entry in entries:
            iou = iou_of(geom, entry[0])
            if iou < iou_thresh:
                continue
            if entry[1]:
                saw_difficult = True
            elif not entry[2] and (best_entry is None or iou > best_iou):
                best_iou, best_entry = iou, entry

        if best_entry is not None:
            best_entry[2] = True
            flags.append(True)
        elif saw_difficult:
            flags.append(None)
        else:
            flags.append(False)
    return flags


def pr_curve(flags: Sequence[bool], n_gt: int) -> tuple[list[float], list[float]]:
    """Cumulative recall/precision at every rank (ignored flags removed upstream)."""
    recalls, precisions = [], []
    tp = 0
    for rank, is_tp in enumerate(flags, start=1):
        tp += 1 if is_tp else 0
        recalls.append(tp / n_gt if n_gt > 0 else 0.0)
        precisions.append(tp / rank)
    return recalls, precisions


def average_precision(flags: Sequence[bool], n_gt: int, metric: str = "voc07") -> float:
    """AP from ordered TP/FP flags.

    voc07: mean over the 11 recall points {0.0, 0.1, ..., 1.0} of the max
    precision at recall >= point.  continuous: area under the monotonized
    precision envelope, summed where recall steps.
    """
    if metric not in ("voc07", "continuous"):
        raise ValueError(f"metric must be 'voc07' or 'continuous', got {metric!r}")
    if n_gt == 0:
        return 0.0
    recalls, precisions = pr_curve(flags, n_gt)

    if metric == "voc07":
        total = 0.0
        for k in range(11):
            point = k / 10.0
            best = 0.0
            for r, p in zip(recalls, precisions):
                if r >= point and p > best:
                    best = p
            total += best
        return total / 11.0

    # continuous: envelope from the right, integrate over recall steps
    mrec = [0.0] + list(recalls) + [1.0]
    mpre = [0.0] + list(precisions) + [0.0]
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    ap = 0.0
    for i in range(1, len(mrec)):
        if mrec[i] != mrec[i - 1]:
            ap += (mrec[i] - mrec[i - 1]) * mpre[i]
    return ap


@dataclass(frozen=True)
class ClassEval:
    category: str
    ap: float
    n_gt: int
    n_det: int
    tp: int
    fp: int
    ignored: int
    recalls: list[float]
    precisions: list[float]
    zero_gt: bool


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[str, ClassEval]
    mean_ap: float
    config: dict
    warnings: list[str]

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "mAP": self.mean_ap,
            "per_class": {
                c: {
                    "AP": e.ap,
                    "n_gt": e.n_gt,
                    "n_det": e.n_det,
                    "tp": e.tp,
                    "fp": e.fp,
                    "ignored": e.ignored,
                    "recalls": e.recalls,
                    "precisions": e.precisions,
                    "zero_gt": e.zero_gt,
                }
                for c, e in self.per_class.items()
            },
            "warnings": self.warnings,
        }


def evaluate_class(
    category: str,
    dets: Sequence[DetRecord],
    gt: GroundTruthSet,
    iou_thresh: float,
    task: str,
    metric: str,
) -> ClassEval:
    gts_by_image = {
        image_id: [(inst.quad, inst.difficult) for inst in insts if inst.category == category]
        for image_id, insts in gt.by_image.items()
    }
    n_gt = sum(1 for insts in gts_by_image.values() for _, difficult in insts if not difficult)

    # stable sort: score ties stay in input (file line) order
    ordered = sorted(dets, key=lambda d: -d.score)
    raw_flags = match_detections(ordered, gts_by_image, iou_thresh, task)
    flags = [f for f in raw_flags if f is not None]
    ignored = len(raw_flags) - len(flags)

    ap = average_precision(flags, n_gt, metric)
    recalls, precisions = pr_curve(flags, n_gt)
    return ClassEval(
        category=category,
        ap=ap,
        n_gt=n_gt,
        n_det=len(dets),
        tp=sum(flags),
        fp=len(flags) - sum(flags),
        ignored=ignored,
        recalls=recalls,
        precisions=precisions,
        zero_gt=n_gt == 0,
    )


def _evaluate_class_args(args: tuple) -> ClassEval:
    return evaluate_class(*args)


def evaluate(
    gt: GroundTruthSet,
    detections: Mapping[str, Sequence[DetRecord]],
    classes: Sequence[str],
    iou_thresh: float = 0.5,
    task: str = "obb",
    metric: str = "voc07",
    jobs: int = 1,
) -> EvalReport:
    """Per-class AP over the declared class list and their arithmetic mean.

    Classes without ground truth contribute AP 0 and a warning instead of
    being dropped, keeping the mAP denominator stable.  Classes are
    independent, so jobs > 1 evaluates them in a process pool; results are
    merged back in class order, keeping output deterministic.
    """
    unknown = set(detections) - set(classes)
    if unknown:
        raise ValueError(f"detections for unknown categories: {sorted(unknown)}")

    work = [(c, detections.get(c, []), gt, iou_thresh, task, metric) for c in classes]
    if jobs > 1 and len(classes) > 1:
        from multiprocessing import Pool

        with Pool(min(jobs, len(classes))) as pool:
            results = pool.map(_evaluate_class_args, work)
    else:
        results = [_evaluate_class_args(w) for w in work]

    per_class: dict[str, ClassEval] = {}
    warnings: list[str] = []
    for result in results:
        per_class[result.category] = result
        if result.zero_gt:
            warnings.append(f"class {result.category!r} has no ground-truth instances; AP set to 0")

    mean_ap = sum(e.ap for e in per_class.values()) / len(per_class) if per_class else 0.0
    config = {
        "iou_thresh": iou_thresh,
        "task": task,
        "metric": metric,
        "classes": list(classes),
    }
    return EvalReport(per_class=per_class, mean_ap=mean_ap, config=config, warnings=warnings)


# ---------------------------------------------------------------------------
# file formats


def _parse_floats(tokens: Sequence[str], path: Path, lineno: int) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: bad number ({exc})") from None


def parse_gt_file(path: str | Path) -> list[GtInstance]:
    path = Path(path)
    instances = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 10:
                raise ValueError(f"{path}:{lineno}: expected 10 fields, got {len(tokens)}")
            coords = _parse_floats(tokens[:8], path, lineno)
            category = tokens[8]
            if tokens[9] not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: difficult flag must be 0 or 1")
            quad = Quadrilateral(tuple((coords[k], coords[k + 1]) for k in range(0, 8, 2)))
            instances.append(GtInstance(quad, category, tokens[9] == "1"))
    return instances


def load_ground_truth(gt_dir: str | Path) -> GroundTruthSet:
    """Read every *.txt in a directory; the image id is the file stem."""
    gt_dir = Path(gt_dir)
    if not gt_dir.is_dir():
        raise ValueError(f"ground-truth directory not found: {gt_dir}")
    by_image: dict[str, list[GtInstance]] = {}
    for path in sorted(gt_dir.glob("*.txt")):
        by_image[path.stem] = parse_gt_file(path)
    return GroundTruthSet(by_image)


def det_file_name(category: str, task: str) -> str:
    prefix = "Task1" if task == "obb" else "Task2"
    return f"{prefix}_{category}.txt"


def parse_det_file(path: str | Path) -> list[DetRecord]:
    path = Path(path)
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 10:
                raise ValueError(f"{path}:{lineno}: expected 10 fields, got {len(tokens)}")
            values = _parse_floats(tokens[1:], path, lineno)
            quad = Quadrilateral(tuple((values[k], values[k + 1]) for k in range(1, 9, 2)))
            records.append(DetRecord(image_id=tokens[0], score=values[0], quad=quad))
    return records


def load_detections(det_dir: str | Path, classes: Sequence[str], task: str) -> dict[str, list[DetRecord]]:
    """Read the per-class Task files; every declared class file must exist."""
    det_dir = Path(det_dir)
    if not det_dir.is_dir():
        raise ValueError(f"detection directory not found: {det_dir}")
    detections = {}
    for category in classes:
        path = det_dir / det_file_name(category, task)
        if not path.is_file():
            raise ValueError(f"missing detection file: {path}")
        detections[category] = parse_det_file(path)
    return detections
