"""Figure rendering for evaluation reports.

Writes matplotlib figures next to the delimited report output: per-axis l1
center error and Euclidean center error over frames, and the per-stage
score trace of a localization cascade run.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def save_error_figures(report, outdir, prefix=""):
    """Render l1 and Euclidean center-error curves to PNG files.

    Returns the list of written paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(report.frame_indices, report.l1_x, label="|dx|")
    ax.plot(report.frame_indices, report.l1_y, label="|dy|")
    ax.set_xlabel("frame")
    ax.set_ylabel("center error (px)")
    ax.set_title("Per-axis l1 center error")
    ax.legend()
    path = os.path.join(outdir, f"{prefix}center_error_l1.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(report.frame_indices, report.euclidean, color="tab:red")
    ax.axhline(report.mean, color="gray", linestyle="--",
               label=f"mean = {report.mean:.2f} px")
    ax.set_xlabel("frame")
    ax.set_ylabel("center error (px)")
    ax.set_title("Euclidean center error")
    ax.legend()
    path = os.path.join(outdir, f"{prefix}center_error_euclidean.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths


def save_localize_figure(result, outdir, prefix=""):
    """Render the per-stage score trace of a cascade localization run."""
    os.makedirs(outdir, exist_ok=True)
    stages = [t.stage for t in result.trace]
    scores = [t.score for t in result.trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(stages, scores, marker="o")
    ax.axhline(0.0, color="gray", linestyle="--")
    ax.set_xlabel("cascade stage")
    ax.set_ylabel("converged score")
    ax.set_title("Annealed localization score trace")
    path = os.path.join(outdir, f"{prefix}localize_trace.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [path]
