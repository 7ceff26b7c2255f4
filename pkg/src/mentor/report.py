"""Report artifacts beyond the markdown table: a metrics figure and a CSV.

The eval command writes these next to the markdown report so the numbers can
be consumed by spreadsheets and the figure dropped into slides.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import METRICS, EvalReport


def render_csv(report: EvalReport) -> str:
    rows = ["category,questions," + ",".join(METRICS)]
    total_questions = 0
    for cat, score in report.per_category.items():
        total_questions += score.questions
        cells = ",".join(f"{score.means[m]:.4f}" for m in METRICS)
        rows.append(f"{cat},{score.questions},{cells}")
    overall = ",".join(f"{report.overall[m]:.4f}" for m in METRICS)
    rows.append(f"total,{total_questions},{overall}")
    return "\n".join(rows) + "\n"


def write_metrics_figure(report: EvalReport, path: str | Path) -> Path:
    """Grouped bar chart of per-category metric means, saved to `path`."""
    path = Path(path)
    categories = list(report.per_category)
    x = np.arange(len(categories))
    width = 0.8 / len(METRICS)

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, metric in enumerate(METRICS):
        values = [report.per_category[c].means[metric] for c in categories]
        ax.bar(x + (i - (len(METRICS) - 1) / 2) * width, values, width, label=metric)
    ax.set_xticks(x)
    ax.set_xticklabels(categories)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean score")
    ax.set_title(f"Evaluation means over {report.rounds} round(s)")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_report_files(report: EvalReport, out_md: str | Path) -> dict[str, Path]:
    """Write report.md plus sibling .csv and .png files; returns their paths."""
    from .evaluation import render_report

    out_md = Path(out_md)
    out_md.parent.mkdir(parents=True, exist_ok=True)
    out_md.write_text(render_report(report), encoding="utf-8")
    out_csv = out_md.with_suffix(".csv")
    out_csv.write_text(render_csv(report), encoding="utf-8")
    out_png = out_md.with_suffix(".png")
    write_metrics_figure(report, out_png)
    return {"markdown": out_md, "csv": out_csv, "figure": out_png}
