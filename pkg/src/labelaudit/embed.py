"""PV-DBOW document embeddings trained with negative sampling.

Each document gets a dense vector trained to predict the words it contains:
for a (document d, word w) pair the objective is

    log sigmoid(v_d . u_w) + sum_k log sigmoid(-v_d . u_neg_k),

with negatives drawn from the unigram distribution raised to 0.75. Training
is single-threaded and sequential so a seed fully determines the result. The
window parameter is accepted for config parity but PV-DBOW has no context
window; it is unused.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._rng import next_uniform, seed_state
from .corpus import LabeledCorpus
from .vectorize import tokenize

NEGATIVE_POWER = 0.75
LR_INITIAL = 0.025
LR_FINAL = 0.0001


@njit(cache=True)
def _sigmoid(x):
    if x > 500.0:
        return 1.0
    if x < -500.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _sample_word(state, cdf):
    """Draw a word index proportional to the cumulative weight table."""
    state, u = next_uniform(state)
    j = np.searchsorted(cdf, u * cdf[-1], side="right")
    if j >= cdf.shape[0]:
        j = cdf.shape[0] - 1
    return state, j


@njit(cache=True)
def _draw_stream(cdf, n_draws, seed):
    state = seed_state(seed)
    out = np.empty(n_draws, dtype=np.int64)
    for i in range(n_draws):
        state, out[i] = _sample_word(state, cdf)
    return out


@njit(cache=True)
def _pair_step(state, v, word_vecs, w, cdf, negatives, lr, work, freeze_words):
    """One (doc, word) SGD step. The doc-vector update is accumulated in
    `work` and applied by the caller after the pair, so every gradient here
    sees the pre-update doc vector."""
    dim = v.shape[0]
    for j in range(dim):
        work[j] = 0.0
    for k in range(negatives + 1):
        if k == 0:
            target = w
            label = 1.0
        else:
            state, target = _sample_word(state, cdf)
            while target == w:
                state, target = _sample_word(state, cdf)
            label = 0.0
        u = word_vecs[target]
        score = 0.0
        for j in range(dim):
            score += v[j] * u[j]
        g = (label - _sigmoid(score)) * lr
        for j in range(dim):
            work[j] += g * u[j]
        if not freeze_words:
            for j in range(dim):
                u[j] += g * v[j]
    return state


@njit(cache=True)
def _train_loop(doc_vecs, word_vecs, tokens, offsets, cdf, negatives, epochs,
                lr0, lr1, seed):
    n_docs = offsets.shape[0] - 1
    dim = doc_vecs.shape[1]
    total_pairs = epochs * tokens.shape[0]
    if total_pairs == 0:
        return
    work = np.empty(dim)
    state = seed_state(seed)
    processed = 0
    for _epoch in range(epochs):
        for d in range(n_docs):
            v = doc_vecs[d]
            for pos in range(offsets[d], offsets[d + 1]):
                lr = lr0 + (lr1 - lr0) * (processed / total_pairs)
                state = _pair_step(state, v, word_vecs, tokens[pos], cdf,
                                   negatives, lr, work, False)
                for j in range(dim):
                    v[j] += work[j]
                processed += 1


@njit(cache=True)
def _infer_loop(v, word_vecs, tokens, cdf, negatives, steps, lr0, lr1, seed):
    dim = v.shape[0]
    total_pairs = steps * tokens.shape[0]
    if total_pairs == 0:
        return
    work = np.empty(dim)
    state = seed_state(seed)
    processed = 0
    for _step in range(steps):
        for pos in range(tokens.shape[0]):
            lr = lr0 + (lr1 - lr0) * (processed / total_pairs)
            state = _pair_step(state, v, word_vecs, tokens[pos], cdf,
                               negatives, lr, work, True)
            for j in range(dim):
                v[j] += work[j]
            processed += 1


def sg_neg_loss(v_d: np.ndarray, u_w: np.ndarray, u_neg: np.ndarray) -> float:
    """Negative-sampling loss of a single (doc, word) pair (lower is better)."""
    def log_sig(x):
        # stable log(sigmoid(x))
        return -np.logaddexp(0.0, -x)

    loss = -log_sig(float(v_d @ u_w))
    for k in range(u_neg.shape[0]):
        loss -= log_sig(-float(v_d @ u_neg[k]))
    return float(loss)


def sg_neg_gradient(v_d: np.ndarray, u_w: np.ndarray, u_neg: np.ndarray):
    """Analytic gradients of sg_neg_loss w.r.t. (v_d, u_w, each u_neg row)."""
    for arr in (v_d, u_w, u_neg):
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite input")
    sig_pos = 1.0 / (1.0 + np.exp(-float(v_d @ u_w)))
    g_v = (sig_pos - 1.0) * u_w
    g_uw = (sig_pos - 1.0) * v_d
    g_uneg = np.empty_like(u_neg)
    for k in range(u_neg.shape[0]):
        sig_k = 1.0 / (1.0 + np.exp(-float(v_d @ u_neg[k])))
        g_v = g_v + sig_k * u_neg[k]
        g_uneg[k] = sig_k * v_d
    return g_v, g_uw, g_uneg


def unigram_table(counts: np.ndarray, power: float = NEGATIVE_POWER) -> np.ndarray:
    """Cumulative sampling weights: word frequencies raised to `power`."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.shape[0] == 0 or np.any(counts <= 0):
        raise ValueError("counts must be a non-empty vector of positive frequencies")
    return np.cumsum(counts ** power)


def draw_negatives(counts: np.ndarray, n_draws: int, seed: int = 0) -> np.ndarray:
    """Sample word indices from the negative-sampling distribution."""
    return _draw_stream(unigram_table(counts), int(n_draws), int(seed))


@dataclass(frozen=True)
class EmbeddingModel:
    """Trained PV-DBOW parameters plus everything needed for inference."""

    doc_ids: tuple
    doc_vectors: np.ndarray
    word_output_vectors: np.ndarray
    word_vocab: dict
    word_counts: np.ndarray
    dim: int
    window: int
    min_count: int
    negatives: int
    epochs: int
    seed: int

    def __post_init__(self):
        if self.doc_vectors.shape != (len(self.doc_ids), self.dim):
            raise ValueError("doc_vectors shape disagrees with ids/dim")
        if self.word_output_vectors.shape != (len(self.word_vocab), self.dim):
            raise ValueError("word_output_vectors shape disagrees with vocab/dim")
        if not (np.all(np.isfinite(self.doc_vectors))
                and np.all(np.isfinite(self.word_output_vectors))):
            raise ValueError("model parameters must be finite")

    def save(self, path) -> None:
        """Single-file .npz: parameter arrays plus a JSON metadata string."""
        words = sorted(self.word_vocab, key=self.word_vocab.get)
        meta = {
            "doc_ids": list(self.doc_ids),
            "words": words,
            "dim": self.dim,
            "window": self.window,
            "min_count": self.min_count,
            "negatives": self.negatives,
            "epochs": self.epochs,
            "seed": self.seed,
        }
        np.savez_compressed(
            path,
            doc_vectors=self.doc_vectors,
            word_output_vectors=self.word_output_vectors,
            word_counts=self.word_counts,
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        )

    @staticmethod
    def load(path) -> "EmbeddingModel":
        with np.load(path) as z:
            meta = json.loads(bytes(z["meta"]).decode("utf-8"))
            return EmbeddingModel(
                doc_ids=tuple(meta["doc_ids"]),
                doc_vectors=z["doc_vectors"],
                word_output_vectors=z["word_output_vectors"],
                word_vocab={w: i for i, w in enumerate(meta["words"])},
                word_counts=z["word_counts"],
                dim=meta["dim"],
                window=meta["window"],
                min_count=meta["min_count"],
                negatives=meta["negatives"],
                epochs=meta["epochs"],
                seed=meta["seed"],
            )


@dataclass(frozen=True)
class DocEmbeddings:
    """Document vectors aligned with their ids."""

    ids: tuple
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.shape[0] != len(self.ids):
            raise ValueError("one vector per id required")

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("id," + ",".join(f"v{j}" for j in range(self.vectors.shape[1])) + "\n")
            for i, doc_id in enumerate(self.ids):
                row = ",".join(repr(float(x)) for x in self.vectors[i])
                fh.write(f"{doc_id},{row}\n")

    @staticmethod
    def load_csv(path) -> "DocEmbeddings":
        ids = []
        rows = []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(",")
            if not header or header[0] != "id":
                raise ValueError("vector csv must start with an 'id' column")
            width = len(header) - 1
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(",")
                if len(parts) != width + 1:
                    raise ValueError(f"line {lineno}: expected {width + 1} columns")
                ids.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if not rows:
            raise ValueError("vector csv has no data rows")
        return DocEmbeddings(ids=tuple(ids), vectors=np.array(rows, dtype=np.float64))


def _word_stats(corpus: LabeledCorpus, min_count: int):
    counts: dict[str, int] = {}
    for doc in corpus.documents:
        for tok in tokenize(doc.text):
            counts[tok] = counts.get(tok, 0) + 1
    words = sorted(w for w, c in counts.items() if c >= min_count)
    if not words:
        raise ValueError(f"no word occurs >= {min_count} times; vocabulary is empty")
    vocab = {w: i for i, w in enumerate(words)}
    freq = np.array([counts[w] for w in words], dtype=np.float64)
    return vocab, freq


def _encode_docs(corpus: LabeledCorpus, vocab: dict):
    token_rows = []
    for doc in corpus.documents:
        row = [vocab[t] for t in tokenize(doc.text) if t in vocab]
        token_rows.append(np.array(row, dtype=np.int64))
    offsets = np.zeros(len(token_rows) + 1, dtype=np.int64)
    for i, row in enumerate(token_rows):
        offsets[i + 1] = offsets[i] + row.shape[0]
    tokens = np.concatenate(token_rows) if token_rows else np.zeros(0, dtype=np.int64)
    return tokens, offsets


def train_pvdbow(corpus: LabeledCorpus, dim: int = 300, window: int = 8,
                 min_count: int = 10, negatives: int = 5, epochs: int = 10,
                 seed: int = 0) -> EmbeddingModel:
    """Train document vectors on the corpus; deterministic given the seed."""
    if not corpus.documents:
        raise ValueError("corpus is empty")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if negatives < 1:
        raise ValueError(f"negatives must be >= 1, got {negatives}")
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    vocab, freq = _word_stats(corpus, min_count)
    if len(vocab) < 2:
        raise ValueError("need at least 2 vocabulary words to sample negatives")
    tokens, offsets = _encode_docs(corpus, vocab)

    n_docs = len(corpus.documents)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    bound = 0.5 / dim
    doc_vectors = rng.uniform(-bound, bound, size=(n_docs, dim))
    word_vectors = np.zeros((len(vocab), dim))
    _train_loop(doc_vectors, word_vectors, tokens, offsets, unigram_table(freq),
                int(negatives), int(epochs), LR_INITIAL, LR_FINAL, int(seed))
    if not (np.all(np.isfinite(doc_vectors)) and np.all(np.isfinite(word_vectors))):
        raise ArithmeticError("training diverged to non-finite parameters")
    return EmbeddingModel(
        doc_ids=tuple(d.id for d in corpus.documents),
        doc_vectors=doc_vectors,
        word_output_vectors=word_vectors,
        word_vocab=vocab,
        word_counts=freq,
        dim=dim,
        window=window,
        min_count=min_count,
        negatives=negatives,
        epochs=epochs,
        seed=seed,
    )


def document_embeddings(model: EmbeddingModel) -> DocEmbeddings:
    return DocEmbeddings(ids=model.doc_ids, vectors=model.doc_vectors.copy())


def infer_vector(model: EmbeddingModel, text: str, steps: int = 20,
                 seed: int = 0) -> np.ndarray:
    """Optimize a fresh doc vector against frozen word vectors.

    A text with no in-vocabulary words gets the zero vector and a warning;
    steps=0 returns the seeded initialization untouched.
    """
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    token_ids = np.array(
        [model.word_vocab[t] for t in tokenize(text) if t in model.word_vocab],
        dtype=np.int64,
    )
    if token_ids.shape[0] == 0:
        warnings.warn("no in-vocabulary words; returning the zero vector",
                      RuntimeWarning, stacklevel=2)
        return np.zeros(model.dim)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x1D0C)))
    bound = 0.5 / model.dim
    v = rng.uniform(-bound, bound, size=model.dim)
    _infer_loop(v, model.word_output_vectors, token_ids,
                unigram_table(model.word_counts), int(model.negatives),
                int(steps), LR_INITIAL, LR_FINAL, int(seed))
    return v


class PvDbowEmbedding(BaseEstimator, TransformerMixin):
    """Estimator wrapper: fit trains the model, transform infers vectors."""

    def __init__(self, dim: int = 300, window: int = 8, min_count: int = 10,
                 negatives: int = 5, epochs: int = 10, infer_steps: int = 20,
                 seed: int = 0):
        self.dim = dim
        self.window = window
        self.min_count = min_count
        self.negatives = negatives
        self.epochs = epochs
        self.infer_steps = infer_steps
        self.seed = seed

    def fit(self, corpus: LabeledCorpus, y=None):
        self.model_ = train_pvdbow(
            corpus, dim=self.dim, window=self.window, min_count=self.min_count,
            negatives=self.negatives, epochs=self.epochs, seed=self.seed,
        )
        return self

    def transform(self, corpus) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("embedding is not fitted")
        texts = [d.text for d in corpus.documents] if isinstance(corpus, LabeledCorpus) else list(corpus)
        out = np.empty((len(texts), self.model_.dim))
        for i, text in enumerate(texts):
            out[i] = infer_vector(self.model_, text, steps=self.infer_steps,
                                  seed=self.seed + i)
        return out

    def fit_transform(self, corpus, y=None) -> np.ndarray:
        self.fit(corpus)
        return self.model_.doc_vectors.copy()
