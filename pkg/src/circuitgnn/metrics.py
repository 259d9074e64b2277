"""Classifier evaluation: confusion matrix, per-class scores and 2-D embeddings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .gcn import GcnModel, predict

PCA_TOL = 1e-9
PCA_MAX_ITER = 1000


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int
    undefined_precision: bool = False


@dataclass
class EvalReport:
    confusion: np.ndarray
    per_class: list[ClassScores]
    macro_avg: tuple[float, float, float]
    weighted_avg: tuple[float, float, float]
    accuracy: float
    class_names: list[str] = field(default_factory=list)
    embeddings: list[tuple[float, float, int, int]] = field(default_factory=list)
    degenerate_embedding: bool = False

    def to_dict(self, decimals: int = 2) -> dict:
        def r(v):
            return round(float(v), decimals)

        names = self.class_names or [f"class {i}" for i in range(len(self.per_class))]
        return {
            "classes": names,
            "confusion": self.confusion.tolist(),
            "per_class": [
                {"class": name, "precision": r(s.precision), "recall": r(s.recall), "f1": r(s.f1),
                 "support": s.support, "precision_undefined": s.undefined_precision,
                 "raw": {"precision": s.precision, "recall": s.recall, "f1": s.f1}}
                for name, s in zip(names, self.per_class)
            ],
            "macro_avg": {"precision": r(self.macro_avg[0]), "recall": r(self.macro_avg[1]),
                          "f1": r(self.macro_avg[2]), "raw": list(self.macro_avg)},
            "weighted_avg": {"precision": r(self.weighted_avg[0]), "recall": r(self.weighted_avg[1]),
                             "f1": r(self.weighted_avg[2]), "raw": list(self.weighted_avg)},
            "accuracy": r(self.accuracy),
            "accuracy_raw": self.accuracy,
            "samples": int(self.confusion.sum()),
            "degenerate_embedding": self.degenerate_embedding,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        """Text table in the usual precision/recall/F1/support layout."""
        names = self.class_names or [f"Class {i}" for i in range(len(self.per_class))]
        width = max(12, *(len(n) for n in names))
        lines = [f"{'':<{width}} {'precision':>9} {'recall':>7} {'f1':>6} {'support':>8}"]
        for name, s in zip(names, self.per_class):
            lines.append(f"{name:<{width}} {s.precision:9.2f} {s.recall:7.2f} {s.f1:6.2f} {s.support:8d}")
        total = int(self.confusion.sum())
        for label, avg in (("macro avg", self.macro_avg), ("weighted avg", self.weighted_avg)):
            lines.append(f"{label:<{width}} {avg[0]:9.2f} {avg[1]:7.2f} {avg[2]:6.2f} {total:8d}")
        lines.append(f"{'accuracy':<{width}} {'':>9} {'':>7} {self.accuracy:6.2f} {total:8d}")
        return "\n".join(lines)


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
    return cm


def scores_from_confusion(cm: np.ndarray, class_names=None) -> EvalReport:
    """Per-class precision/recall/F1 plus macro and support-weighted averages.

    A class that is never predicted reports precision 0 with
    ``undefined_precision`` set; likewise recall 0 for a class with no support.
    """
    cm = np.asarray(cm, dtype=int)
    tp = np.diag(cm).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    support = cm.sum(axis=1)
    per_class = []
    for c in range(cm.shape[0]):
        undefined = predicted[c] == 0
        p = 0.0 if undefined else tp[c] / predicted[c]
        r = 0.0 if support[c] == 0 else tp[c] / support[c]
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        per_class.append(ClassScores(p, r, f1, int(support[c]), bool(undefined)))
    arr = np.array([[s.precision, s.recall, s.f1] for s in per_class])
    macro = tuple(float(v) for v in arr.mean(axis=0))
    total = support.sum()
    weighted = tuple(float(v) for v in (arr * support[:, None]).sum(axis=0) / total) if total else (0.0,) * 3
    accuracy = float(tp.sum() / total) if total else 0.0
    return EvalReport(cm, per_class, macro, weighted, accuracy, list(class_names or []))


# ---------------------------------------------------------------------------
# PCA by power iteration

def _power_iteration(cov: np.ndarray, start: np.ndarray) -> tuple[float, np.ndarray]:
    v = start / np.linalg.norm(start)
    lam = 0.0
    for _ in range(PCA_MAX_ITER):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        w /= norm
        lam_new = float(w @ cov @ w)
        if np.linalg.norm(w - v) < PCA_TOL or abs(lam_new - lam) < PCA_TOL * max(1.0, abs(lam_new)):
            v, lam = w, lam_new
            break
        v, lam = w, lam_new
    return lam, v


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def principal_axes(vectors: np.ndarray, k: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``k`` principal axes (rows), their variances and the data mean.

    Power iteration with deflation; each axis is sign-normalized so its first
    non-negligible loading is positive.
    """
    x = np.asarray(vectors, dtype=float)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / max(len(x), 1)
    dim = cov.shape[0]
    axes, variances = [], []
    deflated = cov.copy()
    for i in range(min(k, dim)):
        # deterministic start: the diagonal plus a fixed tilt keeps it off any eigenspace boundary
        start = np.diag(deflated).copy() + 1.0 + np.arange(dim) * 1e-3
        lam, v = _power_iteration(deflated, start)
        v = _fix_sign(v)
        axes.append(v)
        variances.append(max(lam, 0.0))
        deflated = deflated - lam * np.outer(v, v)
    while len(axes) < k:
        axes.append(np.zeros(dim))
        variances.append(0.0)
    return np.array(axes), np.array(variances), mean


def pca_2d(vectors: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, bool]:
    """Project onto the top two principal components.

    Returns ``(points, degenerate)``; when every vector is identical the
    covariance vanishes and all points sit at the origin.
    """
    x = np.asarray(vectors, dtype=float)
    centered = x - x.mean(axis=0)
    if not np.any(np.abs(centered) > tol):
        return np.zeros((len(x), 2)), True
    axes, _, _ = principal_axes(x, 2)
    return centered @ axes.T, False


def embed_2d(model: GcnModel, data) -> tuple[np.ndarray, bool]:
    _, readouts = predict(model, data)
    return pca_2d(readouts)


def evaluate(model: GcnModel, data, class_names=None, with_embeddings: bool = True) -> EvalReport:
    samples = list(getattr(data, "samples", data))
    if class_names is None:
        class_names = getattr(data, "class_names", None)
    probs, readouts = predict(model, samples)
    y_true = np.array([s.label for s in samples], dtype=int)
    y_pred = probs.argmax(axis=1)
    report = scores_from_confusion(confusion_matrix(y_true, y_pred, model.n_classes), class_names)
    if with_embeddings:
        points, degenerate = pca_2d(readouts)
        report.embeddings = [(float(p[0]), float(p[1]), int(t), int(q))
                             for p, t, q in zip(points, y_true, y_pred)]
        report.degenerate_embedding = degenerate
    return report


def embeddings_csv(embeddings) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "true", "pred"])
    for x, y, t, p in embeddings:
        w.writerow([repr(x), repr(y), t, p])
    return buf.getvalue()
