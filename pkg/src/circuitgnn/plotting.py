"""Figures written next to the delimited reports.

Everything renders through the Agg backend to SVG with a fixed hash salt and
no date stamp, so reruns produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "circuitgnn",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path) -> Path:
    path = Path(path)
    with plt.rc_context({"svg.hashsalt": STYLE["svg.hashsalt"]}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _names(n: int, class_names) -> list[str]:
    return list(class_names) if class_names else [str(i) for i in range(n)]


def plot_confusion(cm: np.ndarray, path, class_names=None, title: str = "Confusion matrix") -> Path:
    cm = np.asarray(cm)
    n = cm.shape[0]
    names = _names(n, class_names)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.2 + 0.55 * n, 1.0 + 0.5 * n))
        ax.imshow(cm, cmap="Blues", vmin=0)
        thresh = cm.max() / 2 if cm.size and cm.max() else 0
        for i in range(n):
            for j in range(n):
                ax.text(j, i, str(cm[i, j]), ha="center", va="center",
                        color="white" if cm[i, j] > thresh else "black", fontsize=7)
        ax.set_xticks(range(n), names, rotation=45, ha="right")
        ax.set_yticks(range(n), names)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_embedding(points: np.ndarray, labels, path, class_names=None,
                   title: str = "Graph embeddings (PCA)") -> Path:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    labels = np.asarray(labels, dtype=int)
    n = int(labels.max()) + 1 if labels.size else 0
    names = _names(n, class_names)
    cmap = plt.get_cmap("tab10")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.6))
        for c in range(n):
            sel = labels == c
            if sel.any():
                ax.scatter(points[sel, 0], points[sel, 1], s=6, color=cmap(c % 10), label=names[c],
                           linewidths=0)
        ax.set_xlabel("PC 1")
        ax.set_ylabel("PC 2")
        ax.set_title(title)
        if n:
            ax.legend(markerscale=2, frameon=False, loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_history(history, path, title: str = "Training curve") -> Path:
    epochs = np.arange(1, len(history.train_loss) + 1)
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.0, 2.8))
        ax1.plot(epochs, history.train_loss, color="C0")
        ax1.set_xlabel("epoch")
        ax1.set_ylabel("train loss")
        ax2.plot(epochs, history.train_accuracy, color="C0", label="train")
        if not np.all(np.isnan(history.test_accuracy)):
            ax2.plot(epochs, history.test_accuracy, color="C1", label="test")
        ax2.set_xlabel("epoch")
        ax2.set_ylabel("accuracy")
        ax2.legend(frameon=False)
        fig.suptitle(title)
        fig.tight_layout()
        return _save(fig, path)


def plot_experiments(set_no: int, results, path) -> Path:
    names = [r.name for r in results]
    x = np.arange(len(results))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 3.0))
        ax.bar(x - 0.2, [r.train_accuracy for r in results], 0.4, label="train")
        ax.bar(x + 0.2, [r.test_accuracy for r in results], 0.4, label="test")
        ax.set_xticks(x, names, rotation=15, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("accuracy")
        ax.set_title(f"Experiment set {set_no}")
        ax.legend(frameon=False, loc="lower right")
        fig.tight_layout()
        return _save(fig, path)
