"""Matplotlib renderings written next to the delimited evaluation outputs:
a confusion-matrix heatmap per evaluated model and one accuracy bar chart
comparing every (model, dimension) cell."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvaluationReport


def save_confusion_matrix(report: EvaluationReport, path, title: str = "") -> None:
    cells = [[report.tp, report.fp], [report.fn, report.tn]]
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.imshow(cells, cmap="Blues")
    ax.set_xticks([0, 1], labels=["actual REAL", "actual SPURIOUS"])
    ax.set_yticks([0, 1], labels=["predicted\nREAL", "predicted\nSPURIOUS"])
    peak = max(max(row) for row in cells)
    for i in range(2):
        for j in range(2):
            color = "white" if peak and cells[i][j] > peak / 2 else "black"
            ax.text(j, i, str(cells[i][j]), ha="center", va="center", color=color)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_accuracy_comparison(
    accuracies: dict[str, dict[int, float]], path, title: str = "Accuracy by model and dimension"
) -> None:
    """``accuracies[model_kind][dim] -> accuracy`` grouped as a bar chart."""
    kinds = list(accuracies)
    dims = sorted({d for per_kind in accuracies.values() for d in per_kind})
    width = 0.8 / max(1, len(dims))
    fig, ax = plt.subplots(figsize=(6.4, 3.8))
    for j, dim in enumerate(dims):
        xs = [i + j * width for i in range(len(kinds))]
        ys = [accuracies[k].get(dim, 0.0) for k in kinds]
        ax.bar(xs, ys, width=width, label=f"dim {dim}")
    ax.set_xticks(
        [i + width * (len(dims) - 1) / 2 for i in range(len(kinds))], labels=kinds
    )
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("accuracy")
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
