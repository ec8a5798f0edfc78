"""
SVG plots of a run. Output is deterministic: fixed hash salt, no date
metadata, Agg backend.
"""

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")  # non-interactive backend
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from neflow.config import get_settings  # noqa: E402
from neflow.models.game import ProfileLayout  # noqa: E402

# Log-scale plots clip values below this
LOG_FLOOR = 1e-16
LOG_METRICS = ("ne_error", "consensus_error", "observer_norm")


def _save(fig, path: Path) -> Path:
    matplotlib.rcParams["svg.hashsalt"] = get_settings().svg_hashsalt
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_actions(
    times: np.ndarray,
    actions: np.ndarray,
    layout: ProfileLayout,
    path: Path,
    x_star: Optional[np.ndarray] = None,
    title: str = "",
    time_label: str = "t",
) -> Path:
    """One panel per action component; one line per agent, NE dashed."""
    components = max(layout.dims)
    fig, axes = plt.subplots(components, 1, figsize=(7, 2.6 * components), sharex=True, squeeze=False)
    for k in range(components):
        ax = axes[k, 0]
        for i in range(layout.N):
            if k >= layout.dims[i]:
                continue
            column = layout.offsets[i] + k
            line, = ax.plot(times, actions[:, column], lw=1.2, label=f"agent {i + 1}")
            if x_star is not None:
                ax.axhline(x_star[column], color=line.get_color(), ls="--", lw=0.8)
        ax.set_ylabel(f"x[{k}]")
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel(time_label)
    if layout.N <= 10:
        axes[0, 0].legend(loc="upper right", fontsize=7, ncol=2)
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_metrics(
    times: np.ndarray,
    metrics: Dict[str, np.ndarray],
    path: Path,
    names: Sequence[str] = LOG_METRICS,
    title: str = "",
    time_label: str = "t",
) -> Path:
    """Convergence metrics on a log scale; identically zero metrics are skipped."""
    fig, ax = plt.subplots(figsize=(7, 3.6))
    for name in names:
        values = np.asarray(metrics.get(name, []))
        if values.size == 0 or not np.any(values > 0):
            continue
        ax.semilogy(times, np.maximum(values, LOG_FLOOR), lw=1.2, label=name)
    ax.set_xlabel(time_label)
    ax.grid(alpha=0.3, which="both")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_osnr(times: np.ndarray, osnr: np.ndarray, path: Path, title: str = "", time_label: str = "t") -> Path:
    """Per-channel OSNR in dB."""
    fig, ax = plt.subplots(figsize=(7, 3.6))
    db = 10.0 * np.log10(np.maximum(osnr, LOG_FLOOR))
    for i in range(db.shape[1]):
        ax.plot(times, db[:, i], lw=1.0, label=f"ch {i + 1}")
    ax.set_xlabel(time_label)
    ax.set_ylabel("OSNR [dB]")
    ax.grid(alpha=0.3)
    ax.legend(loc="upper right", fontsize=7, ncol=2)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
