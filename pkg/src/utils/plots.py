"""SVG figures for reports: line plots, fitness scatter, ROC and confusion matrices.

Figures are drawn on standalone ``Figure`` objects (no pyplot state) and saved
without a date stamp and with a fixed id salt so identical data produce
identical files.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import matplotlib
from matplotlib.figure import Figure
import numpy as np

from src.utils.file_utils import ensure_parent_exists

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_SVG_RC = {'svg.hashsalt': 'ptk', 'svg.fonttype': 'none'}


def save_svg(fig: Figure, path: PathLike) -> Path:
    path = Path(path)
    ensure_parent_exists(path)
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format='svg', metadata={'Date': None}, bbox_inches='tight')
    logger.info(f"Plot written to {path}")
    return path


def line_plot(path: PathLike, x: Sequence[float], series: Dict[str, Sequence[float]],
              title: str = '', xlabel: str = '', ylabel: str = '') -> Path:
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot()
    for name, values in series.items():
        ax.plot(x, values, label=name, linewidth=1.2)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend()
    return save_svg(fig, path)


def fitness_scatter(path: PathLike, names: Sequence[str], monotonicity: Sequence[float],
                    trendability: Sequence[float]) -> Path:
    fig = Figure(figsize=(6, 5))
    ax = fig.add_subplot()
    ax.scatter(monotonicity, trendability, s=25)
    for name, m, t in zip(names, monotonicity, trendability):
        ax.annotate(name, (m, t), fontsize=7, xytext=(3, 3), textcoords='offset points')
    ax.set_xlabel('Monotonicity')
    ax.set_ylabel('Trendability')
    ax.set_xlim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    return save_svg(fig, path)


def roc_plot(path: PathLike, fpr: Sequence[float], tpr: Sequence[float], auc: float) -> Path:
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot()
    ax.plot(fpr, tpr, drawstyle='steps-post', label=f"AUC = {auc:.4f}")
    ax.plot([0, 1], [0, 1], linestyle='--', color='grey', linewidth=0.8)
    ax.set_xlabel('False positive rate')
    ax.set_ylabel('True positive rate')
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc='lower right')
    return save_svg(fig, path)


def confusion_plot(path: PathLike, counts: np.ndarray, class_names: Optional[Sequence[str]] = None) -> Path:
    counts = np.asarray(counts)
    k = counts.shape[0]
    names = list(class_names) if class_names else [str(i) for i in range(k)]
    fig = Figure(figsize=(1.0 + 0.6 * k, 1.0 + 0.6 * k))
    ax = fig.add_subplot()
    ax.imshow(counts, cmap='Blues')
    threshold = counts.max() / 2 if counts.size else 0
    for i in range(k):
        for j in range(k):
            ax.text(j, i, str(int(counts[i, j])), ha='center', va='center', fontsize=8,
                    color='white' if counts[i, j] > threshold else 'black')
    ax.set_xticks(range(k), names, rotation=90, fontsize=7)
    ax.set_yticks(range(k), names, fontsize=7)
    ax.set_xlabel('Predicted')
    ax.set_ylabel('Actual')
    return save_svg(fig, path)


def pca_scatter(path: PathLike, projected: np.ndarray, cycles: Sequence[int]) -> Path:
    """First two principal components coloured by cycle."""
    fig = Figure(figsize=(6, 5))
    ax = fig.add_subplot()
    points = ax.scatter(projected[:, 0], projected[:, 1], c=cycles, s=6, cmap='viridis')
    fig.colorbar(points, ax=ax, label='Cycle')
    ax.set_xlabel('PC1')
    ax.set_ylabel('PC2')
    return save_svg(fig, path)
