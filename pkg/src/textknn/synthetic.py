"""Synthetic token-disjoint corpora for experiments and the test suite.

Classes draw words from disjoint pools (no class name is a prefix of
another), so the tasks are linearly separable by construction and small
encoders can solve them in seconds.
"""
from __future__ import annotations

import numpy as np

from .corpus import TEST, TRAIN, Document, LabeledCorpus, LabelVocab

_NAMES = ("alpha", "bravo", "coral", "delta", "ember", "flint",
          "gusto", "heron", "ivory", "jumbo")


def _texts_for(rng, words, count, doc_len):
    lo, hi = doc_len
    out = []
    for _ in range(count):
        length = int(rng.integers(lo, hi + 1))
        out.append(" ".join(rng.choice(words, size=length)))
    return out


def make_token_disjoint(
    n_docs: int = 300,
    n_classes: int = 3,
    seed: int = 0,
    words_per_class: int = 20,
    doc_len: tuple[int, int] = (4, 9),
    test_fraction: float = 0.3,
    class_names: tuple[str, ...] | None = None,
) -> LabeledCorpus:
    """Balanced corpus with train/test splits and per-class word pools."""
    names = class_names or _NAMES[:n_classes]
    if len(names) < n_classes:
        raise ValueError(f"at most {len(_NAMES)} default class names")
    rng = np.random.default_rng(seed)
    vocab = LabelVocab(names)
    pools = {c: [f"{names[c]}{j}" for j in range(words_per_class)] for c in range(n_classes)}
    labels = [i % n_classes for i in range(n_docs)]
    n_test = int(n_docs * test_fraction)
    test_positions = set(rng.permutation(n_docs)[:n_test].tolist())
    docs = []
    for i, label in enumerate(labels):
        text = _texts_for(rng, pools[label], 1, doc_len)[0]
        split = TEST if i in test_positions else TRAIN
        docs.append(Document(id=i, text=text, label_id=label, split=split))
    return LabeledCorpus(docs, vocab)


def make_subclass(
    n_docs: int = 360,
    n_coarse: int = 3,
    fine_per_coarse: int = 2,
    seed: int = 0,
    words_per_fine: int = 15,
    doc_len: tuple[int, int] = (4, 9),
    test_fraction: float = 0.3,
) -> tuple[LabeledCorpus, dict[int, str]]:
    """Coarse-labeled corpus whose docs also carry nested fine labels.

    Fine classes are token-disjoint; the corpus labels are the coarse parents.
    Returns (corpus, fine label name per doc id).
    """
    coarse_names = _NAMES[:n_coarse]
    subs = "xyzuvw"[:fine_per_coarse]
    fine_names = [f"{c}{s}" for c in coarse_names for s in subs]
    rng = np.random.default_rng(seed)
    vocab = LabelVocab(coarse_names)
    pools = {f: [f"{f}{j}" for j in range(words_per_fine)] for f in fine_names}
    n_test = int(n_docs * test_fraction)
    test_positions = set(rng.permutation(n_docs)[:n_test].tolist())
    docs = []
    fine_of: dict[int, str] = {}
    for i in range(n_docs):
        fine = fine_names[i % len(fine_names)]
        coarse_id = vocab.id_of(fine[: -1])
        text = _texts_for(rng, pools[fine], 1, doc_len)[0]
        split = TEST if i in test_positions else TRAIN
        docs.append(Document(id=i, text=text, label_id=coarse_id, split=split))
        fine_of[i] = fine
    return LabeledCorpus(docs, vocab), fine_of
