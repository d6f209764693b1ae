"""Labeled text corpus ingestion, length filtering, and stratified splitting."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


class CorpusError(ValueError):
    """Raised for unreadable files, malformed records, or empty corpora."""


@dataclass(frozen=True)
class Document:
    """One text instance with its user-assigned label per target class.

    ``char_count`` is the number of Unicode scalar values in ``text``.
    """

    id: str
    text: str
    labels: dict[str, str]

    def __post_init__(self):
        if not self.labels:
            raise CorpusError(f"document {self.id!r} carries no labels")

    @property
    def char_count(self) -> int:
        return len(self.text)

    @property
    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class LabeledCorpus:
    """Ordered collection of documents sharing the same target classes."""

    documents: tuple[Document, ...]
    target_classes: tuple[str, ...]
    label_sets: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        observed: dict[str, list[str]] = {c: [] for c in self.target_classes}
        for doc in self.documents:
            for cls in self.target_classes:
                if cls not in doc.labels:
                    raise CorpusError(
                        f"document {doc.id!r} is missing a label for {cls!r}"
                    )
                if doc.labels[cls] not in observed[cls]:
                    observed[cls].append(doc.labels[cls])
        object.__setattr__(
            self, "label_sets", {c: tuple(v) for c, v in observed.items()}
        )

    def __len__(self) -> int:
        return len(self.documents)

    def labels_for(self, target_class: str) -> list[str]:
        if target_class not in self.target_classes:
            raise CorpusError(f"unknown target class {target_class!r}")
        return [doc.labels[target_class] for doc in self.documents]

    def texts(self) -> list[str]:
        return [doc.text for doc in self.documents]

    def subset(self, indices) -> "LabeledCorpus":
        docs = tuple(self.documents[i] for i in indices)
        return LabeledCorpus(docs, self.target_classes)


@dataclass(frozen=True)
class SplitPair:
    train: LabeledCorpus
    test: LabeledCorpus
    seed: int


def _records_from_file(path, fmt):
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such file: {path}")
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    yield i, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"record {i}: invalid JSON ({exc})") from exc
    elif fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            for i, row in enumerate(csv.DictReader(fh)):
                yield i, row
    else:
        raise CorpusError(f"unsupported format {fmt!r} (expected jsonl or csv)")


def load_corpus(
    path,
    format: str = "jsonl",
    text_fields: list[str] | None = None,
    class_fields: list[str] | None = None,
    id_field: str | None = None,
    on_missing: str = "error",
) -> LabeledCorpus:
    """Read a JSONL or CSV file into a :class:`LabeledCorpus`.

    Document text is the named text fields joined by a single newline, in the
    given order; labels are taken verbatim from the class fields, trimmed of
    surrounding whitespace. Records lacking any named field are rejected
    (``on_missing="error"``) or dropped (``on_missing="skip"``).
    """
    if not text_fields:
        raise CorpusError("text_fields must name at least one field")
    if not class_fields:
        raise CorpusError("class_fields must name at least one field")
    if on_missing not in ("skip", "error"):
        raise CorpusError(f"on_missing must be 'skip' or 'error', got {on_missing!r}")

    needed = list(text_fields) + list(class_fields)
    if id_field:
        needed.append(id_field)
    docs = []
    for idx, rec in _records_from_file(path, format):
        flat = rec.get("project", rec) if isinstance(rec, dict) else rec
        missing = [f for f in needed if not isinstance(flat, dict) or f not in flat or flat[f] is None]
        if missing:
            if on_missing == "error":
                raise CorpusError(f"record {idx}: missing field(s) {missing}")
            continue
        text = "\n".join(str(flat[f]) for f in text_fields)
        labels = {f: str(flat[f]).strip() for f in class_fields}
        doc_id = str(flat[id_field]) if id_field else str(idx)
        docs.append(Document(id=doc_id, text=text, labels=labels))
    if not docs:
        raise CorpusError(f"no records accepted from {path}")
    return LabeledCorpus(tuple(docs), tuple(class_fields))


def filter_by_char_length(corpus: LabeledCorpus, min_chars: int = 0,
                          max_chars: float = math.inf) -> LabeledCorpus:
    """Keep documents with min_chars <= char_count <= max_chars (both inclusive)."""
    if min_chars < 0 or min_chars > max_chars:
        raise CorpusError(f"need 0 <= min_chars <= max_chars, got {min_chars}, {max_chars}")
    docs = tuple(d for d in corpus.documents if min_chars <= d.char_count <= max_chars)
    return LabeledCorpus(docs, corpus.target_classes)


def filter_by_length_zscore(corpus: LabeledCorpus, z_max: float) -> LabeledCorpus:
    """Keep documents whose word-count z-score is strictly below ``z_max``.

    Word count is the whitespace-split token count. The filter is one-sided:
    short documents always survive. With zero length variance every document
    is retained.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot z-score filter an empty corpus")
    counts = [d.word_count for d in corpus.documents]
    mu = sum(counts) / len(counts)
    var = sum((c - mu) ** 2 for c in counts) / len(counts)
    sigma = math.sqrt(var)
    if sigma == 0.0:
        return corpus
    docs = tuple(
        d for d, c in zip(corpus.documents, counts) if (c - mu) / sigma < z_max
    )
    return LabeledCorpus(docs, corpus.target_classes)


def stratified_split(corpus: LabeledCorpus, target_class: str,
                     train_fraction: float, seed: int) -> SplitPair:
    """Split into disjoint train/test corpora, stratified per label.

    Each label contributes round(train_fraction * count) documents to the
    train side (clamped so both sides keep at least one document per label).
    Deterministic for a given seed; document order is preserved within each
    side.
    """
    import numpy as np

    if not 0.0 < train_fraction < 1.0:
        raise CorpusError(f"train_fraction must be in (0, 1), got {train_fraction}")
    labels = corpus.labels_for(target_class)
    by_label: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    for lab, idxs in by_label.items():
        if len(idxs) < 2:
            raise CorpusError(f"label {lab!r} has fewer than 2 documents")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    train_idx: set[int] = set()
    for lab in sorted(by_label):
        idxs = np.array(by_label[lab])
        rng.shuffle(idxs)
        n_train = int(round(train_fraction * len(idxs)))
        n_train = min(max(n_train, 1), len(idxs) - 1)
        train_idx.update(int(i) for i in idxs[:n_train])

    train = corpus.subset([i for i in range(len(corpus)) if i in train_idx])
    test = corpus.subset([i for i in range(len(corpus)) if i not in train_idx])
    return SplitPair(train=train, test=test, seed=seed)


def label_distribution(corpus: LabeledCorpus, target_class: str):
    """Per-label (label, count, percent) rows, sorted by count descending."""
    labels = corpus.labels_for(target_class)
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    total = len(labels)
    rows = [(lab, n, 100.0 * n / total) for lab, n in counts.items()]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows
