"""One-vs-rest linear SVM training, prediction, and F1 evaluation.

The binary trainer solves the L2-regularized hinge-loss SVM in its dual
form,

    min_a  0.5 * a' Q a - sum(a)   s.t.  0 <= a_i <= C,

by coordinate descent over samples with a seeded per-epoch permutation. The
bias is handled as a virtual constant feature, so it is regularized like any
other weight. Every coordinate step is an exact box-clipped minimizer, which
makes the dual objective non-increasing at every step; the value is recorded
at each epoch boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ._rng import seed_state, shuffle_inplace


@njit(cache=True)
def _dual_cd(data, indices, indptr, n_samples, n_features, y, C, tol,
             max_epochs, seed):
    """Dual coordinate descent for one binary problem; y in {-1, +1}.

    Returns (augmented weight vector incl. bias slot, alphas, per-epoch dual
    objective values, epochs run).
    """
    w = np.zeros(n_features + 1)
    alpha = np.zeros(n_samples)
    objective = np.empty(max_epochs)

    # Q_ii = ||x_i||^2 + 1 for the virtual bias feature
    qdiag = np.empty(n_samples)
    for i in range(n_samples):
        s = 1.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * data[k]
        qdiag[i] = s

    order = np.arange(n_samples)
    state = seed_state(seed)
    n_epochs = 0
    for epoch in range(max_epochs):
        state = shuffle_inplace(state, order)
        max_violation = 0.0
        for oi in range(n_samples):
            i = order[oi]
            yi = y[i]
            score = w[n_features]
            for k in range(indptr[i], indptr[i + 1]):
                score += data[k] * w[indices[k]]
            g = yi * score - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = g if g < 0.0 else 0.0
            elif a >= C:
                pg = g if g > 0.0 else 0.0
            else:
                pg = g
            if pg > max_violation:
                max_violation = pg
            elif -pg > max_violation:
                max_violation = -pg
            if pg != 0.0:
                a_new = a - g / qdiag[i]
                if a_new < 0.0:
                    a_new = 0.0
                elif a_new > C:
                    a_new = C
                delta = (a_new - a) * yi
                if delta != 0.0:
                    alpha[i] = a_new
                    for k in range(indptr[i], indptr[i + 1]):
                        w[indices[k]] += delta * data[k]
                    w[n_features] += delta
        obj = 0.0
        for j in range(n_features + 1):
            obj += w[j] * w[j]
        obj = 0.5 * obj - alpha.sum()
        objective[epoch] = obj
        n_epochs = epoch + 1
        if max_violation < tol:
            break
    return w, alpha, objective[:n_epochs], n_epochs


def _as_csr(X) -> sp.csr_matrix:
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    if not np.all(np.isfinite(X.data)):
        raise ValueError("feature matrix contains non-finite values")
    return X


class LinearSvmClassifier(BaseEstimator, ClassifierMixin):
    """One-vs-rest linear SVM with a deterministic dual coordinate solver.

    Parameters
    ----------
    C : penalty weight on the hinge loss (> 0).
    tol : stop a binary problem once the largest projected gradient over an
        epoch falls below this value.
    max_epochs : hard cap on passes over the data.
    seed : PRNG seed for the per-epoch coordinate permutations.

    After ``fit``: ``classes_`` (sorted label order, also the prediction
    tie-break order), ``coef_`` (n_classes x n_features), ``intercept_``,
    ``objective_`` (final dual objective per label), and
    ``objective_history_`` (per-label per-epoch dual objective).
    """

    def __init__(self, C: float = 5.0, tol: float = 1e-4,
                 max_epochs: int = 1000, seed: int = 0):
        self.C = C
        self.tol = tol
        self.max_epochs = max_epochs
        self.seed = seed

    def fit(self, X, y):
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        X = _as_csr(X)
        y = np.asarray(y)
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y disagree on sample count")
        classes = np.array(sorted(set(y.tolist())))
        if classes.shape[0] < 2:
            raise ValueError("need at least 2 distinct labels")
        n_features = X.shape[1]
        coef = np.zeros((classes.shape[0], n_features))
        intercept = np.zeros(classes.shape[0])
        objective = np.zeros(classes.shape[0])
        history = []
        for m, label in enumerate(classes):
            yb = np.where(y == label, 1.0, -1.0)
            w, _, obj, _ = _dual_cd(
                X.data, X.indices, X.indptr, X.shape[0], n_features, yb,
                float(self.C), float(self.tol), int(self.max_epochs),
                int(self.seed),
            )
            coef[m] = w[:n_features]
            intercept[m] = w[n_features]
            objective[m] = obj[-1]
            history.append(obj.copy())
        self.classes_ = classes
        self.coef_ = coef
        self.intercept_ = intercept
        self.objective_ = objective
        self.objective_history_ = history
        return self

    def decision_function(self, X) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise NotFittedError("classifier is not fitted")
        X = _as_csr(X)
        if X.shape[1] != self.coef_.shape[1]:
            raise ValueError(
                f"feature dimension mismatch: {X.shape[1]} != {self.coef_.shape[1]}"
            )
        return X @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]


def train_svm(X, y, C: float = 5.0, tol: float = 1e-4, max_epochs: int = 1000,
              seed: int = 0) -> LinearSvmClassifier:
    return LinearSvmClassifier(C=C, tol=tol, max_epochs=max_epochs, seed=seed).fit(X, y)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true labels, columns are predicted labels."""

    labels: tuple
    counts: np.ndarray

    def row_normalized(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        out = np.divide(self.counts, totals, out=np.zeros_like(self.counts, dtype=np.float64),
                        where=totals > 0)
        return out


def confusion_matrix(y_true, y_pred, labels) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred differ in length")
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in index:
            raise ValueError(f"unknown true label {t!r}")
        if p not in index:
            raise ValueError(f"unknown predicted label {p!r}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(labels=tuple(labels), counts=counts)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall, 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ClassMetrics:
    labels: tuple
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float


def f1_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    """Per-label precision/recall/F1 and their unweighted macro average.

    All 0/0 cases resolve to 0.
    """
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    pred_tot = counts.sum(axis=0).astype(np.float64)
    true_tot = counts.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, pred_tot, out=np.zeros_like(tp), where=pred_tot > 0)
    recall = np.divide(tp, true_tot, out=np.zeros_like(tp), where=true_tot > 0)
    f1 = np.array([f1_score(p, r) for p, r in zip(precision, recall)])
    return ClassMetrics(labels=cm.labels, precision=precision, recall=recall,
                        f1=f1, macro_f1=float(f1.mean()))


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    """Partition indices into k folds, label-balanced, deterministic."""
    y = np.asarray(y)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    folds: list[list[int]] = [[] for _ in range(k)]
    for label in sorted(set(y.tolist())):
        idxs = np.flatnonzero(y == label)
        if idxs.shape[0] < k:
            raise ValueError(f"label {label!r} has fewer than k={k} samples")
        rng.shuffle(idxs)
        for pos, i in enumerate(idxs):
            folds[pos % k].append(int(i))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def cross_validate(X, y, k: int, candidate_Cs, seed: int = 0,
                   tol: float = 1e-4, max_epochs: int = 1000):
    """Pick the C maximizing mean macro-F1 over stratified k-fold validation.

    Ties go to the smaller C. Returns (best_C, {C: mean macro-F1}).
    """
    candidate_Cs = list(candidate_Cs)
    if not candidate_Cs:
        raise ValueError("candidate_Cs is empty")
    X = _as_csr(X)
    y = np.asarray(y)
    labels = sorted(set(y.tolist()))
    if len(candidate_Cs) == 1:
        return candidate_Cs[0], {candidate_Cs[0]: float("nan")}
    folds = stratified_folds(y, k, seed)
    all_idx = np.arange(y.shape[0])
    scores: dict[float, float] = {}
    for C in candidate_Cs:
        fold_scores = []
        for fold in folds:
            mask = np.ones(y.shape[0], dtype=bool)
            mask[fold] = False
            train_idx = all_idx[mask]
            clf = LinearSvmClassifier(C=C, tol=tol, max_epochs=max_epochs,
                                      seed=seed).fit(X[train_idx], y[train_idx])
            pred = clf.predict(X[fold])
            fold_scores.append(f1_metrics(confusion_matrix(y[fold], pred, labels)).macro_f1)
        scores[C] = float(np.mean(fold_scores))
    best = min(scores, key=lambda c: (-scores[c], c))
    return best, scores
