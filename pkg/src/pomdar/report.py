"""Report rendering: delimited per-task tables, structured JSON, and the
radar / PCA figures rendered alongside them."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .scoring import BenchmarkReport


def write_report_json(report: BenchmarkReport, path) -> None:
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def write_report_csv(report: BenchmarkReport, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["embodiment_id", "task_id", "n", "mean_score", "std_score",
                         "mean_correctness", "mean_speed"])
        for a in report.per_task:
            writer.writerow([a.embodiment_id, a.task_id, a.n,
                             f"{a.mean:.6f}", f"{a.std:.6f}",
                             f"{a.mean_correctness:.6f}", f"{a.mean_speed:.6f}"])
        writer.writerow([])
        writer.writerow(["embodiment_id", "n_repetitions", "aggregate_mean", "aggregate_std"])
        for e in report.per_embodiment:
            writer.writerow([e.embodiment_id, e.n_repetitions,
                             f"{e.mean:.6f}", f"{e.std:.6f}"])


def _radar_axes(ax, labels, series: dict[str, list], title: str) -> None:
    n = len(labels)
    angles = np.linspace(0, 2 * np.pi, n, endpoint=False)
    closed = np.concatenate([angles, angles[:1]])
    for name, values in sorted(series.items()):
        vals = [0.0 if v is None else float(v) for v in values]
        vals = vals + vals[:1]
        ax.plot(closed, vals, linewidth=1.2, label=name)
        ax.fill(closed, vals, alpha=0.12)
    ax.set_xticks(angles)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_title(title, fontsize=10)
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.4)


def render_radar_figures(report: BenchmarkReport, out_dir) -> list[Path]:
    """Manipulation (12-spoke) and grasping (6-spoke) radar charts, one
    series per embodiment, written as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    radar = report.radar_data()
    written = []
    for key, labels, fname in (
        ("manipulation", radar["manipulation_labels"], "manipulation_radar.png"),
        ("grasp", radar["grasp_labels"], "grasp_radar.png"),
    ):
        series = {emb: d[key] for emb, d in radar["embodiments"].items()}
        fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(5, 5))
        _radar_axes(ax, labels, series, f"{key} tasks")
        ax.legend(loc="upper right", bbox_to_anchor=(1.25, 1.1), fontsize=8)
        path = out_dir / fname
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def write_report(report: BenchmarkReport, out_dir, figures: bool = True) -> dict:
    """Full report bundle: report.json + report.csv (+ radar PNGs)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, out_dir / "report.json")
    write_report_csv(report, out_dir / "report.csv")
    paths = {"json": out_dir / "report.json", "csv": out_dir / "report.csv"}
    if figures:
        paths["figures"] = render_radar_figures(report, out_dir)
    return paths


def render_pca_figure(projections: np.ndarray, labels, out_path,
                      explained: np.ndarray | None = None) -> Path:
    """Scatter of the first three principal components, colored by task."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    X = np.asarray(projections)
    labels = np.asarray(labels)
    fig, axes = plt.subplots(1, 2 if X.shape[1] >= 3 else 1, figsize=(9, 4))
    axes = np.atleast_1d(axes)
    pairs = [(0, 1), (0, 2)] if X.shape[1] >= 3 else [(0, 1)]
    for ax, (i, j) in zip(axes, pairs):
        for lab in sorted(set(labels.tolist())):
            m = labels == lab
            ax.scatter(X[m, i], X[m, j], s=12, alpha=0.7, label=str(lab))
        xlabel = f"component {i + 1}"
        ylabel = f"component {j + 1}"
        if explained is not None and len(explained) > max(i, j):
            xlabel += f" ({explained[i] * 100:.0f}%)"
            ylabel += f" ({explained[j] * 100:.0f}%)"
        ax.set_xlabel(xlabel, fontsize=9)
        ax.set_ylabel(ylabel, fontsize=9)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=7, loc="best")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
