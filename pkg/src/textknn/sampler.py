"""Per-epoch positive/negative pair sampling over the train split.

Each epoch yields exactly 2n pairs: for every train document one uniformly
drawn same-label partner and one uniformly drawn different-label partner.
A document is never paired with itself unless it is the sole member of its
class (that self-pair carries zero gradient and keeps the 2n count exact).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import TRAIN, LabeledCorpus
from .errors import NoNegativesError


@dataclass(frozen=True)
class PairSample:
    anchor_id: int
    other_id: int
    target: int  # 1 same label, 0 different


class _LabelGroups:
    """Train docs grouped by label with offsets for O(1) uniform draws."""

    def __init__(self, corpus: LabeledCorpus):
        train = [d for d in corpus.documents if d.split == TRAIN]
        by_label: dict[int, list[int]] = {}
        for d in train:
            by_label.setdefault(d.label_id, []).append(d.id)
        self.flat = np.array([i for ids in by_label.values() for i in ids], dtype=np.int64)
        self.start: dict[int, int] = {}
        self.count: dict[int, int] = {}
        pos = 0
        for label, ids in by_label.items():
            self.start[label] = pos
            self.count[label] = len(ids)
            pos += len(ids)
        # position of each doc inside its label slice, for self-exclusion
        self.offset_in_slice = {
            int(doc_id): j
            for label, ids in by_label.items()
            for j, doc_id in enumerate(ids)
        }
        self.train = train
        self.n = len(train)


def sample_epoch(corpus: LabeledCorpus, rng: np.random.Generator) -> list[PairSample]:
    """One epoch of pairs, shuffled; deterministic for a fixed generator state."""
    groups = _LabelGroups(corpus)
    if len(groups.count) < 2:
        raise NoNegativesError("pair sampling needs at least two distinct labels in train split")
    pairs: list[PairSample] = []
    for doc in groups.train:
        label = doc.label_id
        start, cnt = groups.start[label], groups.count[label]
        if cnt == 1:
            pos_id = doc.id
        else:
            r = int(rng.integers(cnt - 1))
            if r >= groups.offset_in_slice[doc.id]:
                r += 1
            pos_id = int(groups.flat[start + r])
        r = int(rng.integers(groups.n - cnt))
        if r >= start:
            r += cnt
        neg_id = int(groups.flat[r])
        pairs.append(PairSample(doc.id, pos_id, 1))
        pairs.append(PairSample(doc.id, neg_id, 0))
    perm = rng.permutation(len(pairs))
    return [pairs[i] for i in perm]


def dump_pairs(pairs, path) -> None:
    """Debug dump: TSV anchor_id<TAB>other_id<TAB>target."""
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(f"{p.anchor_id}\t{p.other_id}\t{p.target}\n")
