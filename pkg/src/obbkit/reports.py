"""Report writers: deterministic JSON, a fixed-width AP table, and matplotlib
figures rendered to files next to the delimited output."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .evaluation import EvalReport


def report_json(report: EvalReport) -> str:
    """Canonical JSON body: sorted keys, fixed separators, trailing newline."""
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n"


def report_table(report: EvalReport) -> str:
    """Plain-text table: one AP column per class plus the mAP, in percent."""
    classes = list(report.per_class)
    header = [f"{c:>18}" for c in classes] + [f"{'mAP':>8}"]
    values = [f"{report.per_class[c].ap * 100:>18.2f}" for c in classes] + [
        f"{report.mean_ap * 100:>8.2f}"
    ]
    lines = [
        f"task={report.config['task']} metric={report.config['metric']} "
        f"iou_thresh={report.config['iou_thresh']}",
        "".join(header),
        "".join(values),
    ]
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, out_dir: str | Path, figures: bool = True) -> None:
    """Write report.json, report.txt and (optionally) per-class PR figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report_json(report), encoding="utf-8", newline="\n")
    (out_dir / "report.txt").write_text(report_table(report), encoding="utf-8", newline="\n")
    if figures:
        render_pr_figures(report, out_dir / "plots")


def render_pr_figures(report: EvalReport, plot_dir: str | Path) -> list[Path]:
    """One precision-recall curve PNG per class with ground truth."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plot_dir = Path(plot_dir)
    plot_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for category, result in report.per_class.items():
        if result.zero_gt:
            continue
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.step([0.0] + result.recalls, [1.0] + result.precisions, where="post")
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        ax.set_title(f"{category}  AP={result.ap:.4f}")
        ax.grid(True, alpha=0.3)
        path = plot_dir / f"pr_{category}.png"
        fig.savefig(path, dpi=100, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def emo_csv(rows: Sequence[tuple[float, float]]) -> str:
    """stride,emo table with full float precision."""
    lines = ["stride,emo"]
    for stride, emo in rows:
        lines.append(f"{stride:g},{emo:.17g}")
    return "\n".join(lines) + "\n"


def render_emo_figure(rows: Sequence[tuple[float, float]], path: str | Path) -> Path:
    """Expected-max-overlap vs anchor stride curve."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    strides = [s for s, _ in rows]
    emos = [e for _, e in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(strides, emos, marker="o")
    ax.set_xlabel("anchor stride (px)")
    ax.set_ylabel("expected max IoU")
    ax.grid(True, alpha=0.3)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, bbox_inches="tight")
    plt.close(fig)
    return path
