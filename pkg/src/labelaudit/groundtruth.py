"""Ground-truth utilities: rate-to-level mapping, user-vs-true label
matrices, and a synthetic corpus generator with controlled label corruption.

The generator separates two document populations. An honest document
(reported label == true label) describes its circumstances: with probability
``signal_doc_rate`` it draws on its true label's signal vocabulary, and then
each signal term appears with probability ``signal_strength``. A corrupted
document does not reveal its true label in text at all; it carries only
background noise plus, occasionally, "echo" terms that restate the label its
author chose. This makes honestly labeled classes rich in comparably
indicative terms while claimed classes have only a few isolated markers, and
``signal_doc_rate`` < 1 caps how recallable even an honest class can be.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classify import confusion_matrix
from .corpus import Document, LabeledCorpus

SYNTH_CLASS = "label"


@dataclass(frozen=True)
class LevelScale:
    """Ordered percentage bins tiling [0, 100].

    Bins are lower-inclusive and upper-exclusive, except the last bin which
    also includes 100.
    """

    bins: tuple

    def __post_init__(self):
        if not self.bins:
            raise ValueError("scale needs at least one bin")
        if self.bins[0][0] != 0 or self.bins[-1][1] != 100:
            raise ValueError("bins must span exactly [0, 100]")
        for (lo, hi, _), (nlo, _, _) in zip(self.bins, self.bins[1:]):
            if hi != nlo:
                raise ValueError("bins must tile with no gaps or overlaps")
        if any(lo >= hi for lo, hi, _ in self.bins):
            raise ValueError("each bin needs lower < upper")

    def levels(self) -> tuple:
        return tuple(name for _, _, name in self.bins)


POVERTY_SCALE = LevelScale(bins=(
    (0, 25, "Low Poverty"),
    (25, 50, "Moderate Poverty"),
    (50, 75, "High Poverty"),
    (75, 100, "Highest Poverty"),
))


def map_rate_to_level(rate: float, scale: LevelScale = POVERTY_SCALE) -> str:
    """Map a percentage to its level name (boundary values go up)."""
    if not 0 <= rate <= 100 or math.isnan(rate):
        raise ValueError(f"rate must be in [0, 100], got {rate}")
    for lo, hi, name in scale.bins:
        if lo <= rate < hi:
            return name
    return scale.bins[-1][2]  # rate == 100


def truth_matrix(user_labels: Sequence, true_labels: Sequence,
                 labels: Sequence) -> np.ndarray:
    """Row-normalized percentages: rows are user-given labels, columns true."""
    cm = confusion_matrix(user_labels, true_labels, labels)
    return cm.row_normalized() * 100.0


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Controlled corpus recipe; corruption rows map true -> reported label.

    ``true_label_priors`` defaults to uniform. Echo terms are an artifact
    mechanism (not tied to any published dataset): a claimed label's marker
    appears with probability ``echo_strength`` in documents reporting it and
    ``echo_base_rate`` elsewhere.
    """

    n_docs: int
    labels: tuple
    corruption: np.ndarray
    signal_terms_per_label: int = 120
    signal_strength: float = 0.7
    signal_doc_rate: float = 1.0
    vocab_noise: int = 2000
    seed: int = 0
    true_label_priors: Optional[tuple] = None
    background_terms_per_doc: int = 30
    echo_terms_per_label: int = 2
    echo_strength: float = 0.12
    echo_base_rate: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "corruption",
                           np.asarray(self.corruption, dtype=np.float64))
        m = len(self.labels)
        if m < 2:
            raise ValueError("need at least 2 labels")
        if self.n_docs < 1:
            raise ValueError("n_docs must be positive")
        if self.corruption.shape != (m, m):
            raise ValueError(f"corruption must be {m}x{m}")
        if np.any(self.corruption < 0) or np.any(self.corruption > 1):
            raise ValueError("corruption entries must be probabilities")
        if not np.allclose(self.corruption.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("corruption rows must sum to 1")
        for name, p in (("signal_strength", self.signal_strength),
                        ("signal_doc_rate", self.signal_doc_rate),
                        ("echo_strength", self.echo_strength),
                        ("echo_base_rate", self.echo_base_rate)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.true_label_priors is not None:
            pri = tuple(float(x) for x in self.true_label_priors)
            if len(pri) != m or any(x < 0 for x in pri) \
                    or abs(sum(pri) - 1.0) > 1e-9:
                raise ValueError("true_label_priors must be a distribution "
                                 "over the labels")
            object.__setattr__(self, "true_label_priors", pri)
        if self.vocab_noise < 1 or self.signal_terms_per_label < 1:
            raise ValueError("vocab sizes must be positive")

    def priors(self) -> np.ndarray:
        if self.true_label_priors is None:
            return np.full(len(self.labels), 1.0 / len(self.labels))
        return np.array(self.true_label_priors)


def generate_synthetic(spec: SynthSpec):
    """Build a labeled corpus plus its hidden true labels.

    Deterministic given the seed; each document draws from its own seeded
    stream keyed by document index, so generation order does not matter.
    """
    m = len(spec.labels)
    priors = spec.priors()
    documents = []
    true_out = []
    for i in range(spec.n_docs):
        rng = np.random.default_rng(np.random.SeedSequence((spec.seed, i)))
        t = int(rng.choice(m, p=priors))
        r = int(rng.choice(m, p=spec.corruption[t]))
        tokens = [f"w{k:05d}" for k in rng.integers(0, spec.vocab_noise,
                                                    spec.background_terms_per_doc)]
        if r == t and rng.random() < spec.signal_doc_rate:
            keep = rng.random(spec.signal_terms_per_label) < spec.signal_strength
            tokens.extend(f"sig{t}t{j}" for j in np.flatnonzero(keep))
        for lab in range(m):
            rate = spec.echo_strength if lab == r else spec.echo_base_rate
            keep = rng.random(spec.echo_terms_per_label) < rate
            tokens.extend(f"echo{lab}t{j}" for j in np.flatnonzero(keep))
        order = rng.permutation(len(tokens))
        text = " ".join(tokens[k] for k in order)
        documents.append(Document(id=f"d{i:05d}", text=text,
                                  labels={SYNTH_CLASS: spec.labels[r]}))
        true_out.append(spec.labels[t])
    corpus = LabeledCorpus(documents=tuple(documents),
                           target_classes=(SYNTH_CLASS,))
    return corpus, true_out


def save_jsonl(corpus: LabeledCorpus, path, true_labels: Optional[Sequence] = None) -> None:
    """Write one record per document; round-trips through corpus.load_corpus."""
    if true_labels is not None and len(true_labels) != len(corpus.documents):
        raise ValueError("true_labels length must match the corpus")
    with open(path, "w", encoding="utf-8") as fh:
        for i, doc in enumerate(corpus.documents):
            rec = {"id": doc.id, "text": doc.text}
            rec.update(doc.labels)
            if true_labels is not None:
                rec["true_label"] = true_labels[i]
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def preset_spec(name: str, n_docs: int = 5000, seed: int = 0) -> SynthSpec:
    """Shipped corruption recipes: objective, subjective, rating."""
    if name == "objective":
        return SynthSpec(
            n_docs=n_docs,
            labels=("low", "moderate", "high", "highest"),
            corruption=np.eye(4),
            seed=seed,
        )
    if name == "subjective":
        # Most documents are truly low/moderate; three true labels report
        # almost anything but the truth, skewed toward claiming "highest",
        # while reported "low" stays nearly pure. Only some honest authors
        # write their signal vocabulary, keeping even the pure label hard
        # to recall.
        return SynthSpec(
            n_docs=n_docs,
            labels=("low", "moderate", "high", "highest"),
            corruption=np.array([
                [0.09, 0.30, 0.30, 0.31],
                [0.01, 0.01, 0.44, 0.54],
                [0.01, 0.02, 0.01, 0.96],
                [0.01, 0.02, 0.02, 0.95],
            ]),
            true_label_priors=(0.60, 0.32, 0.05, 0.03),
            signal_doc_rate=0.55,
            seed=seed,
        )
    if name == "rating":
        # adjacent-value confusion on a 5-point scale; symmetric and doubly
        # stochastic, so with uniform priors the reported-vs-true matrix
        # estimates the corruption matrix itself
        return SynthSpec(
            n_docs=n_docs,
            labels=("1", "2", "3", "4", "5"),
            corruption=np.array([
                [0.80, 0.20, 0.00, 0.00, 0.00],
                [0.20, 0.60, 0.20, 0.00, 0.00],
                [0.00, 0.20, 0.60, 0.20, 0.00],
                [0.00, 0.00, 0.20, 0.60, 0.20],
                [0.00, 0.00, 0.00, 0.20, 0.80],
            ]),
            seed=seed,
        )
    raise ValueError(f"unknown preset {name!r}")
