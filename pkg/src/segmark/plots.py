"""Report figures rendered to files alongside the delimited output.

Three figures summarize an evaluation: a reliability diagram (confidence vs
accuracy per bin), the boundary-error histogram, and span detection accuracy
versus the IoU threshold.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evalkit import EvalReport, reliability_bins  # noqa: E402

_BUCKETS = ["off_by_1", "off_by_3", "off_by_5", "off_by_10", "larger"]
_BUCKET_LABELS = ["<=1", "<=3", "<=5", "<=10", ">10"]


def reliability_diagram(probs: np.ndarray, labels: np.ndarray, path, bins=15) -> Path:
    """Per-bin mean confidence vs accuracy with the identity for reference."""
    _, accs, confs, counts = reliability_bins(probs, labels, bins)
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot([0.0, 1.0], [0.0, 1.0], "k--", linewidth=0.8, label="perfect")
    sel = counts > 0
    ax.bar(confs[sel], accs[sel], width=1.0 / bins, color="tab:blue", alpha=0.7,
           label="observed")
    ax.set_xlabel("confidence")
    ax.set_ylabel("accuracy")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def boundary_error_plot(report: EvalReport, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    hist = report.boundary_error_hist
    ax.bar(_BUCKET_LABELS, [hist.get(k, 0.0) for k in _BUCKETS], color="tab:red")
    ax.set_xlabel("boundary distance (tokens)")
    ax.set_ylabel("fraction of non-exact boundaries")
    ax.set_title(
        f"exact: {report.boundary_exact}/{report.boundary_total} boundaries"
    )
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sbda_vs_tau_plot(report: EvalReport, path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    taus = sorted(report.sbda.keys())
    ax.plot(taus, [report.sbda[t] for t in taus], "o-", label="SBDA")
    ax.plot(taus, [report.segprec[t] for t in taus], "s-", label="SegPrec")
    ax.set_xlabel("IoU threshold")
    ax.set_ylabel("rate")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_report_figures(
    report: EvalReport,
    out_dir,
    probs: np.ndarray | None = None,
    labels: np.ndarray | None = None,
) -> list[Path]:
    """Write all applicable figures into `out_dir`; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        boundary_error_plot(report, out_dir / "boundary_errors.png"),
        sbda_vs_tau_plot(report, out_dir / "sbda_vs_tau.png"),
    ]
    if probs is not None and labels is not None and len(probs):
        paths.insert(
            0,
            reliability_diagram(probs, labels, out_dir / "reliability.png"),
        )
    return paths
