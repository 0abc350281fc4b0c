"""Report output: JSON, delimited rows, and rendered figures.

``write_report`` drops three files into the output directory: the full
report as JSON, the raw metric rows as CSV, and a PNG figure summarizing
the aggregate view of the experiment. Rendering is headless (Agg).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentReport

__all__ = ["write_report", "write_rows_csv", "render_figure"]


def write_rows_csv(report: ExperimentReport, path) -> None:
    fieldnames = sorted({key for row in report.rows for key in row})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fieldnames})


def write_report(report: ExperimentReport, out_dir, figures: bool = True) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json", "rows": out / "rows.csv"}
    paths["report"].write_text(report.to_json(), encoding="utf-8")
    write_rows_csv(report, paths["rows"])
    if figures:
        paths["figure"] = out / f"{report.name}.png"
        render_figure(report, paths["figure"])
    return paths


def _medians_by(rows, group_key, value_key):
    groups: dict = {}
    for row in rows:
        groups.setdefault(row[group_key], []).append(float(row[value_key]))
    keys = sorted(groups)
    return keys, [float(np.median(groups[k])) for k in keys]


def _variant_series(rows, axis):
    variants = sorted({row["variant"] for row in rows})
    series = {}
    for variant in variants:
        sub = [r for r in rows if r["variant"] == variant]
        series[variant] = _medians_by(sub, axis, "accuracy")
    return series


def render_figure(report: ExperimentReport, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    name = report.name
    if name == "filter-fitting":
        variants = sorted({row["variant"] for row in report.rows})
        filters = sorted({row["filter"] for row in report.rows})
        width = 0.8 / len(variants)
        for i, variant in enumerate(variants):
            sub = [r for r in report.rows if r["variant"] == variant]
            keys, medians = _medians_by(sub, "filter", "mse")
            offsets = [filters.index(k) + i * width for k in keys]
            ax.bar(offsets, medians, width=width, label=variant)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(filters))])
        ax.set_xticklabels(filters)
        ax.set_ylabel("median MSE")
        ax.set_yscale("log")
    elif name == "band-accuracy":
        keys, medians = _medians_by(report.rows, "lam_center", "accuracy")
        ax.plot(keys, medians, marker="o")
        ax.scatter([r["lam_center"] for r in report.rows], [r["accuracy"] for r in report.rows],
                   s=8, alpha=0.3, color="grey")
        ax.set_xlabel("band center eigenvalue")
        ax.set_ylabel("test accuracy")
    elif name in ("oversmoothing", "robustness"):
        axis = "depth" if name == "oversmoothing" else "rate"
        for variant, (keys, medians) in _variant_series(report.rows, axis).items():
            ax.plot(keys, medians, marker="o", label=variant)
        ax.set_xlabel(axis)
        ax.set_ylabel("median test accuracy")
    elif name == "sampling-study":
        sp = [r for r in report.rows if r["study"] == "spearman"]
        if sp:
            keys, medians = _medians_by(sp, "S", "accuracy")
            ax.plot(keys, medians, marker="o", label="node-based accuracy vs S")
            ax.set_xscale("log", base=2)
            ax.set_xlabel("sampling multiple S")
            ax.set_ylabel("median test accuracy")
            rho = report.aggregates.get("spearman_rho")
            if rho is not None:
                ax.set_title(f"spearman rho = {rho:.3f}")
    else:
        ax.text(0.5, 0.5, f"no renderer for {name}", ha="center")
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.suptitle(report.name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
