"""Unit-norm embedding store with exact nearest-neighbor lookup and majority vote.

Lookup is a brute-force scan: distances are exact, ranking by L2 on unit
vectors coincides with ranking by descending cosine (L2^2 = 2 - 2cos), and
equal distances resolve by insertion order. Reads take a consistent snapshot;
mutations (add, relabel) are the caller's single-writer responsibility.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import TRAIN, Document, LabeledCorpus, LabelVocab
from .errors import (
    ConfigError,
    DegenerateNormError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    NotFoundError,
)

INDEX_VERSION = 1


def normalize(v: np.ndarray) -> np.ndarray:
    """v / ||v||, exactly idempotent: vectors already unit within 1e-9 pass
    through unchanged, so re-normalizing stored rows never perturbs bits."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateNormError("cannot normalize the zero vector")
    if abs(norm - 1.0) < 1e-9:
        return v.copy()
    return v / norm


@dataclass(frozen=True)
class Neighbor:
    id: int
    distance: float
    label_id: int


@dataclass(frozen=True)
class Prediction:
    label_id: int
    votes: dict[int, int]
    neighbors: tuple[Neighbor, ...]
    k: int


class EmbeddingIndex:
    def __init__(self, dim: int, vocab: LabelVocab):
        self.dim = dim
        self.vocab = vocab
        self._rows: list[np.ndarray] = []
        self._ids: list[int] = []
        self._labels: list[int] = []
        self._pos: dict[int, int] = {}
        self._matrix: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(self._ids)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self._labels)

    def matrix(self) -> np.ndarray:
        if self._matrix is None or self._matrix.shape[0] != len(self._rows):
            self._matrix = np.vstack(self._rows) if self._rows else np.empty((0, self.dim))
        return self._matrix

    def label_of(self, doc_id: int) -> int:
        return self._labels[self._position(doc_id)]

    def vector_of(self, doc_id: int) -> np.ndarray:
        return self._rows[self._position(doc_id)]

    def __contains__(self, doc_id: int) -> bool:
        return doc_id in self._pos

    def _position(self, doc_id: int) -> int:
        try:
            return self._pos[doc_id]
        except KeyError:
            raise NotFoundError(f"document {doc_id} not in index") from None

    def add(self, doc_id: int, embedding: np.ndarray, label_id: int) -> None:
        """Append a normalized row; the next lookup sees it. No retraining."""
        if doc_id in self._pos:
            raise DuplicateIdError(f"document {doc_id} already indexed")
        if embedding.shape != (self.dim,):
            raise DimensionMismatchError(self.dim, embedding.shape[-1], "embedding")
        if not 0 <= label_id < len(self.vocab):
            raise ConfigError(f"label id {label_id} outside vocab of size {len(self.vocab)}")
        self._pos[doc_id] = len(self._rows)
        self._rows.append(normalize(np.asarray(embedding, dtype=np.float64)))
        self._ids.append(doc_id)
        self._labels.append(label_id)
        self._matrix = None

    def relabel(self, doc_id: int, label_id: int) -> None:
        """Update a stored label in place; the embedding is untouched."""
        if not 0 <= label_id < len(self.vocab):
            raise ConfigError(f"label id {label_id} outside vocab of size {len(self.vocab)}")
        self._labels[self._position(doc_id)] = label_id

    def knn(self, query: np.ndarray, k: int) -> list[Neighbor]:
        """k nearest rows by L2 distance, ascending; distance ties resolve to
        the earlier insertion."""
        if not 1 <= k <= len(self):
            raise ConfigError(f"k must lie in [1, {len(self)}], got {k}")
        dists = np.linalg.norm(self.matrix() - query, axis=1)
        order = np.argsort(dists, kind="stable")[:k]
        return [
            Neighbor(self._ids[i], float(dists[i]), self._labels[i]) for i in order
        ]

    def classify(self, query: np.ndarray, k: int) -> Prediction:
        """Majority vote over the k nearest labels; a tied vote goes to the
        label of the nearest neighbor carrying a tied label."""
        neighbors = self.knn(query, k)
        votes = Counter(n.label_id for n in neighbors)
        top = max(votes.values())
        tied = {label for label, c in votes.items() if c == top}
        winner = next(n.label_id for n in neighbors if n.label_id in tied)
        return Prediction(winner, dict(votes), tuple(neighbors), k)

    def copy(self) -> "EmbeddingIndex":
        clone = EmbeddingIndex(self.dim, self.vocab.copy())
        clone._rows = [r.copy() for r in self._rows]
        clone._ids = list(self._ids)
        clone._labels = list(self._labels)
        clone._pos = dict(self._pos)
        return clone


def build_index(encoder, corpus: LabeledCorpus, docs: Optional[Sequence[Document]] = None,
                vocab: Optional[LabelVocab] = None) -> EmbeddingIndex:
    """Index the train split (or an explicit doc sequence) in corpus order."""
    if docs is None:
        docs = corpus.split_docs(TRAIN)
    if not docs:
        raise EmptyCorpusError("cannot build an index from an empty train split")
    index = EmbeddingIndex(encoder.dim, vocab if vocab is not None else corpus.vocab)
    for doc in docs:
        index.add(doc.id, encoder.encode_document(doc), doc.label_id)
    return index


def select_k(
    index: EmbeddingIndex,
    encoder,
    dev_docs: Sequence[Document],
    k_range: tuple[int, int] = (1, 100),
    labels: Optional[Sequence[int]] = None,
) -> tuple[int, float]:
    """Grid-search k over [lo, hi] (capped at the index size) by dev accuracy.

    Ties go to the smallest k. `labels` overrides the dev documents' own label
    ids (used when voting against a different label layer than the one the
    docs carry).
    """
    if not dev_docs:
        raise ConfigError("k selection needs a non-empty labeled dev set")
    lo, hi = k_range
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad k range [{lo}, {hi}]")
    hi = min(hi, len(index))
    lo = min(lo, hi)
    truths = [d.label_id for d in dev_docs] if labels is None else list(labels)

    # one sorted neighbor-label sequence per doc, then prefix votes per k
    per_doc: list[list[int]] = []
    for doc in dev_docs:
        query = normalize(encoder.encode_document(doc))
        per_doc.append([n.label_id for n in index.knn(query, hi)])

    best_k, best_acc = lo, -1.0
    for k in range(lo, hi + 1):
        correct = 0
        for labels_sorted, truth in zip(per_doc, truths):
            votes = Counter(labels_sorted[:k])
            top = max(votes.values())
            tied = {l for l, c in votes.items() if c == top}
            pred = next(l for l in labels_sorted if l in tied)
            correct += pred == truth
        acc = correct / len(dev_docs)
        if acc > best_acc:
            best_k, best_acc = k, acc
    return best_k, best_acc


def save_index(index: EmbeddingIndex, path: str | Path) -> None:
    header = {
        "version": INDEX_VERSION,
        "dim": index.dim,
        "count": len(index),
        "vocab": list(index.vocab.names),
    }
    np.savez(
        path,
        header=json.dumps(header),
        vectors=index.matrix(),
        ids=np.asarray(index.ids, dtype=np.int64),
        labels=np.asarray(index.labels, dtype=np.int64),
    )


def load_index(path: str | Path, expect_dim: Optional[int] = None) -> EmbeddingIndex:
    try:
        data = np.load(path)
    except Exception as exc:
        raise ConfigError(f"unreadable index file {path}: {exc}") from exc
    with data:
        try:
            header = json.loads(str(data["header"]))
            vectors = data["vectors"]
            ids = data["ids"]
            labels = data["labels"]
        except KeyError as exc:
            raise ConfigError(f"index file {path} missing field {exc}") from exc
        if header.get("version") != INDEX_VERSION:
            raise ConfigError(f"unsupported index version {header.get('version')!r}")
        dim = int(header["dim"])
        if vectors.ndim != 2 or vectors.shape[1] != dim or vectors.shape[0] != header["count"]:
            raise ConfigError(f"index file {path} header disagrees with stored rows")
        if expect_dim is not None and dim != expect_dim:
            raise DimensionMismatchError(expect_dim, dim, "index")
        index = EmbeddingIndex(dim, LabelVocab(header["vocab"]))
        for row, doc_id, label in zip(vectors, ids, labels):
            # rows were stored normalized; do not renormalize, keep bits exact
            index._pos[int(doc_id)] = len(index._rows)
            index._rows.append(np.array(row, dtype=np.float64))
            index._ids.append(int(doc_id))
            index._labels.append(int(label))
    return index
