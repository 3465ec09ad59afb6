"""Explanation and label-audit tooling over a built index.

Everything here is read-only: neighbor-based justification records for single
predictions, leave-one-out vote disagreement flags for suspect labels,
transitive near-duplicate groups, and a deterministic 2-D PCA projection for
the viewer.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DegenerateProjectionError
from .index import EmbeddingIndex, Prediction, normalize

LABEL_INCONSISTENCY = "label_inconsistency"
DUPLICATE = "duplicate"


@dataclass(frozen=True)
class NeighborDetail:
    id: int
    text: str
    label: str
    distance: float
    agrees_with_prediction: bool


@dataclass
class ExplanationRecord:
    query_text: str
    predicted_label: str
    true_label: Optional[str]
    neighbors: tuple[NeighborDetail, ...]
    k: int
    votes: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "query_text": self.query_text,
            "predicted_label": self.predicted_label,
            "true_label": self.true_label,
            "k": self.k,
            "votes": self.votes,
            "neighbors": [vars(n) for n in self.neighbors],
        }


@dataclass(frozen=True)
class AnomalyFlag:
    kind: str
    doc_ids: tuple[int, ...]
    evidence: dict

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "doc_ids": list(self.doc_ids), "evidence": self.evidence}


def explain(
    index: EmbeddingIndex,
    encoder,
    text: str,
    k: int,
    texts: dict[int, str],
    true_label: Optional[str] = None,
) -> tuple[Prediction, ExplanationRecord]:
    """Classify text and package the voting neighbors as the justification.

    The predicted label is classify's own, by construction (single code path).
    """
    prediction = index.classify(normalize(encoder.encode_text(text)), k)
    predicted = index.vocab.name_of(prediction.label_id)
    details = tuple(
        NeighborDetail(
            id=n.id,
            text=texts.get(n.id, ""),
            label=index.vocab.name_of(n.label_id),
            distance=n.distance,
            agrees_with_prediction=n.label_id == prediction.label_id,
        )
        for n in prediction.neighbors
    )
    votes = {index.vocab.name_of(l): c for l, c in prediction.votes.items()}
    return prediction, ExplanationRecord(text, predicted, true_label, details, k, votes)


def flag_inconsistencies(
    index: EmbeddingIndex, k: int, min_disagreement: float = 0.5
) -> list[AnomalyFlag]:
    """Leave-one-out neighbor vote for every indexed doc; flag docs whose
    neighbors disagree with their own label at or above the threshold.

    Ordered by disagreement descending, then id.
    """
    if len(index) < k + 1:
        raise ConfigError(f"need at least k+1={k + 1} indexed docs, have {len(index)}")
    if not 0.0 <= min_disagreement <= 1.0:
        raise ConfigError("min_disagreement must lie in [0, 1]")
    matrix = index.matrix()
    ids = index.ids
    labels = index.labels
    flags = []
    for pos in range(len(index)):
        dists = np.linalg.norm(matrix - matrix[pos], axis=1)
        order = [p for p in np.argsort(dists, kind="stable") if p != pos][:k]
        neighbor_labels = [labels[p] for p in order]
        disagreement = sum(1 for l in neighbor_labels if l != labels[pos]) / k
        if disagreement >= min_disagreement:
            flags.append(
                AnomalyFlag(
                    kind=LABEL_INCONSISTENCY,
                    doc_ids=(ids[pos],),
                    evidence={
                        "own_label": index.vocab.name_of(labels[pos]),
                        "neighbor_labels": [index.vocab.name_of(l) for l in neighbor_labels],
                        "neighbor_ids": [ids[p] for p in order],
                        "disagreement": disagreement,
                    },
                )
            )
    flags.sort(key=lambda f: (-f.evidence["disagreement"], f.doc_ids[0]))
    return flags


def find_near_duplicates(index: EmbeddingIndex, epsilon: float = 1e-6) -> list[AnomalyFlag]:
    """Transitive groups of rows within epsilon L2 distance of each other.

    epsilon=0 keeps exactly the identical-embedding pairs.
    """
    if epsilon < 0:
        raise ConfigError("epsilon must be >= 0")
    matrix = index.matrix()
    ids = index.ids
    n = len(index)
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pair_dist: dict[tuple[int, int], float] = {}
    for i in range(n):
        dists = np.linalg.norm(matrix[i + 1 :] - matrix[i], axis=1)
        for off in np.nonzero(dists <= epsilon)[0]:
            j = i + 1 + int(off)
            pair_dist[(i, j)] = float(dists[off])
            ra, rb = find(i), find(j)
            if ra != rb:
                parent[rb] = ra

    groups: dict[int, list[int]] = {}
    for pos in range(n):
        root = find(pos)
        groups.setdefault(root, []).append(pos)
    flags = []
    for members in groups.values():
        if len(members) < 2:
            continue
        member_set = set(members)
        linked = [d for (i, j), d in pair_dist.items() if i in member_set]
        flags.append(
            AnomalyFlag(
                kind=DUPLICATE,
                doc_ids=tuple(sorted(ids[p] for p in members)),
                evidence={"max_pair_distance": max(linked), "pairs": len(linked)},
            )
        )
    flags.sort(key=lambda f: f.doc_ids[0])
    return flags


def project_2d(index: EmbeddingIndex) -> np.ndarray:
    """PCA of the centered embedding matrix onto its top-2 components.

    Deterministic up to nothing: each component's largest-magnitude loading is
    forced positive. Rows map to (x, y) in index order.
    """
    if len(index) < 2:
        raise ConfigError("projection needs at least 2 indexed docs")
    if index.dim < 2:
        raise ConfigError("projection needs embedding dimension >= 2")
    matrix = index.matrix()
    centered = matrix - matrix.mean(axis=0)
    if not np.any(centered):
        raise DegenerateProjectionError("all embeddings identical; projection undefined")
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for comp in components:
        if comp[np.argmax(np.abs(comp))] < 0:
            comp *= -1.0
    return centered @ components.T


def export_projection_csv(index: EmbeddingIndex, path: str | Path) -> None:
    coords = project_2d(index)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y", "label"])
        for doc_id, label_id, (x, y) in zip(index.ids, index.labels, coords):
            writer.writerow([doc_id, repr(float(x)), repr(float(y)),
                             index.vocab.name_of(label_id)])


def export_anomalies_jsonl(flags: Sequence[AnomalyFlag], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for flag in flags:
            fh.write(json.dumps(flag.to_json_dict()) + "\n")
