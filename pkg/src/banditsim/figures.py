"""Figure rendering for run reports.

Kept separate from the metric computations so library users who only
want numbers never import matplotlib. Everything draws through the Agg
backend and writes straight to files.
"""

from __future__ import annotations

import math
import os
import tempfile

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402

from .metrics import RunReport

_CURVE_COLORS = {
    "baseline": "#888888",
    "meta_train": "#1f77b4",
    "evaluate": "#2ca02c",
    "meta_test": "#d62728",
    "meta_test_warm": "#d62728",
    "meta_test_uniform": "#ff9f40",
}


def _save(fig: Figure, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".png.tmp")
    os.close(fd)
    try:
        fig.savefig(tmp, format="png", dpi=120, bbox_inches="tight")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_failures_over_cost(report: RunReport, path: str) -> None:
    """Cumulative found failures against cumulative cost, one step per curve."""
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.add_subplot(111)
    for name, curve in report.curves.items():
        if not curve:
            continue
        costs = [0.0] + [c for c, _ in curve]
        found = [0.0] + [f for _, f in curve]
        color = _CURVE_COLORS.get(name)
        ax.step(costs, found, where="post", label=name, color=color)
    if report.break_even is not None:
        ax.axvline(
            report.break_even,
            linestyle=":",
            color="black",
            linewidth=1,
            label=f"break-even ({report.break_even:.1f})",
        )
    ax.set_xlabel("cumulative cost")
    ax.set_ylabel("failures found")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def save_fidelity_posterior(doc: dict, path: str) -> None:
    """Per-setting posterior mean success for each arm, reference arm marked.

    Takes the saved posterior document rather than live state so the
    report path can render from files alone.
    """
    settings = doc["settings"]
    cols = 4
    rows = max(1, math.ceil(len(settings) / cols))
    fig = Figure(figsize=(3.2 * cols, 2.4 * rows))
    axes = fig.subplots(rows, cols, squeeze=False)
    for i, setting in enumerate(settings):
        ax = axes[i // cols][i % cols]
        alphas = setting["alpha"]
        betas = setting["beta"]
        means = [a / (a + b) for a, b in zip(alphas, betas)]
        ax.bar(range(len(means)), means, color="#1f77b4")
        ax.set_ylim(0.0, 1.0)
        ax.set_title(setting["name"], fontsize=8)
        ax.tick_params(labelsize=7)
    for j in range(len(settings), rows * cols):
        axes[j // cols][j % cols].axis("off")
    fig.suptitle("posterior mean success per fidelity arm", fontsize=10)
    fig.tight_layout()
    _save(fig, path)
