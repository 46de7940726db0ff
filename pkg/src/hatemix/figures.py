"""Figure rendering for the report paths, using the Agg backend so runs are
headless and byte-reproducible. Each saver writes one PNG next to the CSV
the same command produced."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .embeddings import SimilarityReport
from .evaluation import CVReport

METRIC_LABELS = ("Precision", "Recall", "F-score", "Accuracy")
_DPI = 150


def save_cv_figure(report: CVReport, path) -> None:
    """Grouped bars: four metric bars per architecture, percent scale."""
    archs = [r.architecture for r in report.results]
    values = np.array(
        [report.selected_metrics(r).as_tuple() for r in report.results]
    )  # (n_arch, 4)
    positions = np.arange(len(archs))
    width = 0.2
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    for i, label in enumerate(METRIC_LABELS):
        ax.bar(positions + (i - 1.5) * width, values[:, i], width, label=label)
    ax.set_xticks(positions)
    ax.set_xticklabels(archs)
    ax.set_ylim(0, 105)
    ax.set_ylabel("percent")
    ax.set_title(f"Cross-validation metrics ({report.metadata.get('k', '?')} folds)")
    ax.legend(ncol=2, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_similarity_figure(report: SimilarityReport, path) -> None:
    """Per-group cosine similarity bars, one series per embedding source."""
    names = [row.group_name for row in report.rows]
    domain = [row.domain_similarity for row in report.rows]
    positions = np.arange(len(names))
    has_general = any(row.general_similarity is not None for row in report.rows)
    width = 0.35 if has_general else 0.6
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    offset = -width / 2 if has_general else 0.0
    ax.bar(positions + offset, domain, width, label="domain embeddings")
    if has_general:
        general_pos = [p for p, row in zip(positions, report.rows)
                       if row.general_similarity is not None]
        general_val = [row.general_similarity for row in report.rows
                       if row.general_similarity is not None]
        ax.bar(np.array(general_pos) + width / 2, general_val, width,
               label="general embeddings")
    ax.set_xticks(positions)
    ax.set_xticklabels(names)
    ax.set_ylabel("mean cosine similarity")
    ax.set_title(f"Similarity of {report.reference_word!r} to word groups")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
