"""Tokenization and TF-IDF bag-of-words vectorization over unigram+bigram vocabularies."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .corpus import LabeledCorpus

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on maximal runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: list[str], ngram_max: int) -> list[str]:
    """Unigrams plus space-joined n-grams up to ``ngram_max``."""
    out = list(tokens)
    for n in range(2, ngram_max + 1):
        out.extend(
            " ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1)
        )
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Immutable term -> column mapping with per-term document frequencies.

    Column indices are assigned lexicographically, so a vocabulary is a pure
    function of the corpus contents.
    """

    terms: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int
    ngram_max: int

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def index_to_term(self) -> list[str]:
        out = [""] * len(self.terms)
        for t, i in self.terms.items():
            out[i] = t
        return out

    def idf(self) -> np.ndarray:
        """Smoothed log idf: ln((1+n)/(1+df)) + 1, always >= 1."""
        return np.log((1.0 + self.n_docs) / (1.0 + self.doc_freq)) + 1.0

    def save(self, path) -> None:
        payload = {
            "n_docs": self.n_docs,
            "ngram_max": self.ngram_max,
            "terms": self.index_to_term,
            "doc_freq": self.doc_freq.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        terms = {t: i for i, t in enumerate(payload["terms"])}
        return cls(
            terms=terms,
            doc_freq=np.asarray(payload["doc_freq"], dtype=np.int64),
            n_docs=int(payload["n_docs"]),
            ngram_max=int(payload["ngram_max"]),
        )


def _as_texts(corpus) -> list[str]:
    if isinstance(corpus, LabeledCorpus):
        return corpus.texts()
    return list(corpus)


def build_vocabulary(corpus, ngram_max: int = 2, min_df: int = 2) -> Vocabulary:
    """Collect every n-gram with document frequency >= min_df.

    Bigrams are formed within each document's token stream (no sentence
    boundaries) and joined by a single space.
    """
    if ngram_max not in (1, 2):
        raise ValueError(f"ngram_max must be 1 or 2, got {ngram_max}")
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    texts = _as_texts(corpus)
    if not texts:
        raise ValueError("cannot build a vocabulary from an empty corpus")

    df: dict[str, int] = {}
    for text in texts:
        for term in set(ngrams(tokenize(text), ngram_max)):
            df[term] = df.get(term, 0) + 1
    kept = sorted(t for t, c in df.items() if c >= min_df)
    terms = {t: i for i, t in enumerate(kept)}
    doc_freq = np.array([df[t] for t in kept], dtype=np.int64)
    return Vocabulary(terms=terms, doc_freq=doc_freq, n_docs=len(texts),
                      ngram_max=ngram_max)


def tfidf_transform(corpus, vocab: Vocabulary, normalize: bool = True) -> sp.csr_matrix:
    """Raw-count tf times smoothed idf, optionally L2-normalized per row.

    Out-of-vocabulary terms are ignored; a document with no in-vocabulary
    terms yields an all-zero row.
    """
    texts = _as_texts(corpus)
    idf = vocab.idf()
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts: dict[int, int] = {}
        for term in ngrams(tokenize(text), vocab.ngram_max):
            col = vocab.terms.get(term)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        cols = sorted(counts)
        row = [counts[c] * idf[c] for c in cols]
        if normalize and row:
            norm = np.sqrt(np.dot(row, row))
            if norm > 0:
                row = [v / norm for v in row]
        indices.extend(cols)
        data.extend(row)
        indptr.append(len(indices))
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64),
         np.asarray(indices, dtype=np.int32),
         np.asarray(indptr, dtype=np.int32)),
        shape=(len(texts), len(vocab)),
    )
    return X


def binarize(matrix: sp.spmatrix) -> sp.csr_matrix:
    """Replace every nonzero weight with 1 (document-presence matrix)."""
    out = sp.csr_matrix(matrix, copy=True)
    out.eliminate_zeros()
    out.data.fill(1.0)
    return out


class TfidfBowVectorizer(BaseEstimator, TransformerMixin):
    """Sklearn-style wrapper around :func:`build_vocabulary` / :func:`tfidf_transform`.

    Accepts either a :class:`~labelaudit.corpus.LabeledCorpus` or a plain
    sequence of strings.
    """

    def __init__(self, ngram_max: int = 2, min_df: int = 2, normalize: bool = True):
        self.ngram_max = ngram_max
        self.min_df = min_df
        self.normalize = normalize

    def fit(self, X, y=None):
        self.vocabulary_ = build_vocabulary(X, self.ngram_max, self.min_df)
        return self

    def transform(self, X) -> sp.csr_matrix:
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("TfidfBowVectorizer must be fitted before transform")
        return tfidf_transform(X, self.vocabulary_, self.normalize)
