"""Chi-squared term/label association scores and the NFIS summary.

Scores work on document-level binary presence: a term either occurs in a
document or it does not, raw term frequency plays no role here. The NFIS for
a label is the sum of its K largest chi-squared scores divided by the largest
one, so it lives in [1, K] whenever the label has any indicative term at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .vectorize import Vocabulary

DEFAULT_K = 100


class UndefinedScoreError(ValueError):
    """A label has no indicative terms, so its NFIS is undefined (not zero)."""


@dataclass(frozen=True)
class ContingencyCounts:
    """Four-cell document counts for one (term, label) pair.

    Cells partition the corpus: term present/absent crossed with label
    c/not-c. They always sum to ``n_docs``.
    """

    n_docs: int
    term_and_label: int
    term_not_label: int
    label_not_term: int
    neither: int

    def __post_init__(self):
        cells = (self.term_and_label, self.term_not_label,
                 self.label_not_term, self.neither)
        if any(c < 0 for c in cells):
            raise ValueError("contingency cells must be non-negative")
        if sum(cells) != self.n_docs:
            raise ValueError("contingency cells must sum to the document count")


def contingency(presence: sp.csr_matrix, y, t: int, c) -> ContingencyCounts:
    """Count documents by (term t present?, label == c?)."""
    n_docs, n_terms = presence.shape
    if not 0 <= t < n_terms:
        raise ValueError(f"term index {t} out of range for {n_terms} terms")
    y = np.asarray(y)
    if y.shape[0] != n_docs:
        raise ValueError("label vector length does not match document count")
    label_mask = y == c
    if not label_mask.any():
        raise ValueError(f"unknown label {c!r}")
    term_mask = np.zeros(n_docs, dtype=bool)
    col = presence.getcol(t).tocoo()
    term_mask[col.row] = True
    tc = int(np.count_nonzero(term_mask & label_mask))
    return ContingencyCounts(
        n_docs=n_docs,
        term_and_label=tc,
        term_not_label=int(np.count_nonzero(term_mask)) - tc,
        label_not_term=int(np.count_nonzero(label_mask)) - tc,
        neither=n_docs - int(np.count_nonzero(term_mask | label_mask)),
    )


def chi2(counts: ContingencyCounts) -> float:
    """Chi-squared association of one term/label pair.

    Any zero margin (term everywhere or nowhere, label everywhere or
    nowhere) makes the statistic degenerate and scores 0.
    """
    if counts.n_docs <= 0:
        raise ValueError("chi2 requires at least one document")
    n = float(counts.n_docs)
    a = float(counts.term_and_label)
    b = float(counts.term_not_label)
    c = float(counts.label_not_term)
    d = float(counts.neither)
    term_margin = a + b
    label_margin = a + c
    denom = term_margin * (c + d) * label_margin * (b + d)
    if denom == 0.0:
        return 0.0
    diff = a * d - b * c
    return n * diff * diff / denom


@dataclass(frozen=True)
class ChiSquareTable:
    """Chi-squared scores for every (term, label) pair; shape |V| x M."""

    vocab: Vocabulary
    labels: tuple
    scores: np.ndarray

    def __post_init__(self):
        expected = (len(self.vocab.terms), len(self.labels))
        if self.scores.shape != expected:
            raise ValueError(f"scores shape {self.scores.shape} != {expected}")

    def label_column(self, c) -> np.ndarray:
        """All term scores for one label (the paper's f_c vector)."""
        try:
            m = self.labels.index(c)
        except ValueError:
            raise ValueError(f"unknown label {c!r}") from None
        return self.scores[:, m]

    def term_row(self, t: int) -> np.ndarray:
        return self.scores[t, :]


def chi2_table(presence: sp.csr_matrix, y, vocab: Vocabulary) -> ChiSquareTable:
    """Score every (term, label) pair in one pass over the corpus.

    Works from per-label document-frequency counts; each cell equals
    chi2(contingency(...)) for that pair.
    """
    n_docs, n_terms = presence.shape
    y = np.asarray(y)
    if y.shape[0] != n_docs:
        raise ValueError("label vector length does not match document count")
    labels = tuple(sorted(set(y.tolist())))
    if len(labels) < 2:
        raise ValueError("chi2_table requires at least 2 distinct labels")
    if len(vocab.terms) != n_terms:
        raise ValueError("vocabulary size does not match presence matrix width")

    indicator = np.zeros((n_docs, len(labels)), dtype=np.float64)
    for m, lab in enumerate(labels):
        indicator[y == lab, m] = 1.0
    # a[t, m] = docs containing term t with label m
    a = np.asarray((presence.T @ indicator))
    term_total = np.asarray(presence.sum(axis=0)).ravel()  # docs containing t
    label_total = indicator.sum(axis=0)                    # docs labeled m
    b = term_total[:, None] - a
    c = label_total[None, :] - a
    d = float(n_docs) - term_total[:, None] - c

    denom = (term_total[:, None] * (n_docs - term_total)[:, None]
             * label_total[None, :] * (n_docs - label_total)[None, :])
    diff = a * d - b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(denom > 0.0, n_docs * diff * diff / denom, 0.0)
    return ChiSquareTable(vocab=vocab, labels=labels, scores=scores)


def top_indicative_terms(table: ChiSquareTable, c, K: int) -> list[tuple[str, float]]:
    """The K highest-scoring terms for a label, ties to the lower term index."""
    f_c = table.label_column(c)
    if K < 1 or K > f_c.shape[0]:
        raise ValueError(f"K={K} outside [1, {f_c.shape[0]}]")
    order = np.argsort(-f_c, kind="stable")[:K]
    names = table.vocab.index_to_term
    return [(names[i], float(f_c[i])) for i in order]


def nfis(table: ChiSquareTable, c, K: int = DEFAULT_K) -> float:
    """Normalized Feature Indicative Score: sum of K largest f_c over max f_c.

    Raises UndefinedScoreError when the label has no nonzero score; the
    quantity is undefined there rather than zero.
    """
    f_c = table.label_column(c)
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > f_c.shape[0]:
        raise ValueError(f"K={K} exceeds vocabulary size {f_c.shape[0]}")
    peak = float(f_c.max())
    if peak <= 0.0:
        raise UndefinedScoreError(f"label {c!r} has no indicative terms")
    # sorted copy; the tie-break on the cut only matters for term identity,
    # equal values contribute the same sum either way
    top = np.sort(f_c, kind="stable")[-K:]
    return float(top.sum()) / peak


@dataclass(frozen=True)
class NfisDistribution:
    """Per-label NFIS values plus their max/min spread.

    ``values`` maps label -> score, or None where the score is undefined.
    ``imbalance`` is max/min over the defined labels, None if none are.
    """

    K: int
    values: dict
    imbalance: Optional[float]

    def defined(self) -> dict:
        return {lab: v for lab, v in self.values.items() if v is not None}


def nfis_distribution(table: ChiSquareTable, K: int = DEFAULT_K) -> NfisDistribution:
    values: dict = {}
    for lab in table.labels:
        try:
            values[lab] = nfis(table, lab, K)
        except UndefinedScoreError:
            values[lab] = None
    defined = [v for v in values.values() if v is not None]
    imbalance = max(defined) / min(defined) if defined else None
    return NfisDistribution(K=K, values=values, imbalance=imbalance)
