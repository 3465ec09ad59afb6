from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from textknn.corpus import TRAIN, Document, LabeledCorpus, LabelVocab
from textknn.encoder import TrainableEncoder
from textknn.errors import (
    ConfigError,
    DegenerateNormError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    NotFoundError,
)
from textknn.index import (
    EmbeddingIndex,
    build_index,
    load_index,
    normalize,
    save_index,
    select_k,
)
from tests.conftest import make_cluster_index

# oracles ----------------------------------------------------------------------


def knn_oracle(rows, ids, labels, query, k):
    """Exhaustive scan; ties by insertion position."""
    dists = [float(np.linalg.norm(r - query)) for r in rows]
    order = sorted(range(len(rows)), key=lambda i: (dists[i], i))[:k]
    return [(ids[i], dists[i], labels[i]) for i in order]


def vote_oracle(neighbors):
    counts = Counter(label for _, _, label in neighbors)
    top = max(counts.values())
    tied = {label for label, c in counts.items() if c == top}
    for _, _, label in neighbors:
        if label in tied:
            return label, dict(counts)
    raise AssertionError("unreachable")


# normalize ---------------------------------------------------------------------


def test_normalize_345():
    np.testing.assert_array_equal(normalize(np.array([3.0, 4.0])), [0.6, 0.8])


def test_normalize_unit_vector_unchanged():
    v = np.array([1.0, 0.0, 0.0])
    assert np.array_equal(normalize(v), v)
    w = np.array([0.6, 0.8])
    assert np.array_equal(normalize(w), w)


def test_normalize_idempotent_bitwise():
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(6)
        once = normalize(v)
        assert np.array_equal(normalize(once), once)
        assert abs(np.linalg.norm(once) - 1.0) < 1e-9


def test_normalize_zero_vector():
    with pytest.raises(DegenerateNormError):
        normalize(np.zeros(4))


# build -------------------------------------------------------------------------


def _corpus3():
    vocab = LabelVocab(["A", "B"])
    docs = [
        Document(0, "alpha words here", 0),
        Document(1, "beta other words", 1),
        Document(2, "alpha again now", 0),
    ]
    return LabeledCorpus(docs, vocab)


def test_build_three_docs(untrained_encoder):
    index = build_index(untrained_encoder, _corpus3())
    assert len(index) == 3
    norms = np.linalg.norm(index.matrix(), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-6)
    assert index.ids == (0, 1, 2)


def test_build_empty_split(untrained_encoder):
    vocab = LabelVocab(["A"])
    corpus = LabeledCorpus([Document(0, "x", 0, split="test")], vocab)
    with pytest.raises(EmptyCorpusError):
        build_index(untrained_encoder, corpus)


def test_rebuild_identical(untrained_encoder):
    a = build_index(untrained_encoder, _corpus3())
    b = build_index(untrained_encoder, _corpus3())
    assert np.array_equal(a.matrix(), b.matrix())


# knn / classify -----------------------------------------------------------------


def test_knn_self_retrieval():
    index = make_cluster_index(seed=1)
    query = index.vector_of(5)
    got = index.knn(query, 1)
    assert got[0].id == 5 and got[0].distance == 0.0


def test_knn_k_validation():
    index = make_cluster_index(n_per_cluster=2, n_clusters=2)
    for bad in (0, -1, len(index) + 1):
        with pytest.raises(ConfigError):
            index.knn(np.ones(index.dim) / np.sqrt(index.dim), bad)


def test_knn_matches_oracle_random():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n, d = int(rng.integers(3, 60)), int(rng.integers(2, 8))
        vocab = LabelVocab(["a", "b", "c"])
        index = EmbeddingIndex(d, vocab)
        rows = []
        for i in range(n):
            v = rng.standard_normal(d)
            index.add(i, v, int(rng.integers(0, 3)))
            rows.append(normalize(v))
        query = normalize(rng.standard_normal(d))
        k = int(rng.integers(1, n + 1))
        got = index.knn(query, k)
        expect = knn_oracle(rows, list(index.ids), list(index.labels), query, k)
        # order and identity exact; distances may differ by ~1 ulp between the
        # vectorized scan and the oracle's per-row norm
        assert [(g.id, g.label_id) for g in got] == [(i, l) for i, _, l in expect]
        for g, (_, dist, _) in zip(got, expect):
            assert abs(g.distance - dist) <= 1e-12


def test_knn_distance_tie_insertion_order():
    vocab = LabelVocab(["a", "b"])
    index = EmbeddingIndex(3, vocab)
    v = np.array([1.0, 0.0, 0.0])
    index.add(10, v, 0)
    index.add(11, v, 1)  # same vector, later insertion
    index.add(12, np.array([0.0, 1.0, 0.0]), 0)
    got = index.knn(v, 2)
    assert [n.id for n in got] == [10, 11]


def test_classify_k1_and_tie_break():
    # craft distances: B closest, then A, A, B -> 2:2 tie, nearest tied label B
    vocab = LabelVocab(["A", "B"])
    index = EmbeddingIndex(2, vocab)
    angles = [0.1, 0.2, 0.3, 0.4]
    labels = [1, 0, 0, 1]
    for i, (t, l) in enumerate(zip(angles, labels)):
        index.add(i, np.array([np.cos(t), np.sin(t)]), l)
    query = np.array([1.0, 0.0])
    assert index.classify(query, 1).label_id == 1
    pred = index.classify(query, 4)
    assert pred.votes == {0: 2, 1: 2}
    assert pred.label_id == 1


def test_classify_votes_sum_to_k():
    index = make_cluster_index(seed=3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        q = normalize(rng.standard_normal(index.dim))
        k = int(rng.integers(1, len(index) + 1))
        pred = index.classify(q, k)
        assert sum(pred.votes.values()) == k
        assert len(pred.neighbors) == k
        dists = [n.distance for n in pred.neighbors]
        assert dists == sorted(dists)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 40), d=st.integers(2, 6))
def test_l2_rank_equals_descending_cosine_rank(seed, n, d):
    rng = np.random.default_rng(seed)
    rows = [normalize(rng.standard_normal(d)) for _ in range(n)]
    query = normalize(rng.standard_normal(d))
    l2 = np.array([np.linalg.norm(r - query) for r in rows])
    cos = np.array([float(r @ query) for r in rows])
    assert list(np.argsort(l2, kind="stable")) == list(np.argsort(-cos, kind="stable"))


def test_neighbor_distance_bounds():
    index = make_cluster_index(seed=5)
    q = normalize(np.ones(index.dim))
    for n in index.knn(q, len(index)):
        assert 0.0 <= n.distance <= 2.0 + 1e-12


# add / relabel -------------------------------------------------------------------


def test_add_then_query():
    index = make_cluster_index(n_per_cluster=3, n_clusters=2, seed=2)
    v = normalize(np.array([1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]))
    index.add(99, v, 1)
    got = index.knn(v, 1)
    assert got[0].id == 99 and got[0].distance == 0.0


def test_add_new_class_becomes_votable():
    index = make_cluster_index(n_per_cluster=3, n_clusters=2, seed=2)
    new_id = index.vocab.add("fresh")
    v = normalize(np.array([0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
    index.add(50, v, new_id)
    assert index.classify(v, 1).label_id == new_id


def test_add_counting_and_invariants():
    index = make_cluster_index(n_per_cluster=4, n_clusters=2, seed=8)
    n = len(index)
    rng = np.random.default_rng(1)
    for i in range(5):
        index.add(100 + i, rng.standard_normal(index.dim), 0)
    assert len(index) == n + 5
    norms = np.linalg.norm(index.matrix(), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-6)
    assert len(set(index.ids)) == len(index)


def test_add_duplicate_and_bad_label():
    index = make_cluster_index(n_per_cluster=2, n_clusters=2, seed=0)
    with pytest.raises(DuplicateIdError):
        index.add(0, np.ones(index.dim), 0)
    with pytest.raises(ConfigError):
        index.add(77, np.ones(index.dim), 99)
    with pytest.raises(DimensionMismatchError):
        index.add(78, np.ones(index.dim + 1), 0)


def test_relabel_flows():
    vocab = LabelVocab(["A", "B"])
    index = EmbeddingIndex(2, vocab)
    index.add(0, np.array([1.0, 0.0]), 0)
    index.add(1, np.array([0.0, 1.0]), 1)
    index.relabel(0, 1)
    assert index.classify(np.array([1.0, 0.0]), 1).label_id == 1
    before = index.matrix().copy()
    index.relabel(0, 1)  # same label: no-op
    assert np.array_equal(index.matrix(), before)
    fresh = index.vocab.add("C")
    index.relabel(0, fresh)
    assert index.label_of(0) == fresh
    with pytest.raises(NotFoundError):
        index.relabel(42, 0)


def test_incremental_consistency(untrained_encoder):
    from textknn.synthetic import make_token_disjoint

    corpus = make_token_disjoint(n_docs=30, n_classes=3, seed=4, test_fraction=0.0)
    docs = corpus.split_docs(TRAIN)
    full = build_index(untrained_encoder, corpus)
    partial = build_index(untrained_encoder, corpus, docs=docs[:10])
    for doc in docs[10:]:
        partial.add(doc.id, untrained_encoder.encode_document(doc), doc.label_id)
    rng = np.random.default_rng(0)
    for _ in range(10):
        q = normalize(rng.standard_normal(full.dim))
        a = [(n.id, n.distance) for n in full.knn(q, 5)]
        b = [(n.id, n.distance) for n in partial.knn(q, 5)]
        assert a == b


# select_k ------------------------------------------------------------------------


def test_select_k_separable(tiny_corpus, tiny_index):
    encoder, index = tiny_index
    dev = tiny_corpus.split_docs("dev")
    k, acc = select_k(index, encoder, dev)
    assert acc >= 0.95
    assert 1 <= k <= len(index)


def test_select_k_caps_range():
    index = make_cluster_index(n_per_cluster=3, n_clusters=2, seed=0)

    class VectorEncoder:
        dim = index.dim

        def encode_document(self, doc):
            v = np.zeros(index.dim)
            v[doc.label_id] = 1.0
            return v

    dev = [Document(900 + i, "q", i % 2) for i in range(4)]
    k, acc = select_k(index, VectorEncoder(), dev, k_range=(1, 100))
    assert k <= len(index)


def test_select_k_prefers_smallest_tie():
    # single-cluster index: every k gives accuracy 1.0 -> smallest k wins
    index = make_cluster_index(n_per_cluster=6, n_clusters=1, spread=0.01, seed=0)
    index.vocab.add("other")

    class CenterEncoder:
        dim = index.dim

        def encode_document(self, doc):
            v = np.zeros(index.dim)
            v[0] = 1.0
            return v

    dev = [Document(500, "q", 0)]
    k, acc = select_k(index, CenterEncoder(), dev)
    assert k == 1 and acc == 1.0


def test_select_k_empty_dev():
    index = make_cluster_index(n_per_cluster=2, n_clusters=2)
    with pytest.raises(ConfigError):
        select_k(index, None, [])


# persistence ----------------------------------------------------------------------


def test_save_load_bit_identical(tmp_path):
    index = make_cluster_index(seed=11)
    path = tmp_path / "idx.npz"
    save_index(index, path)
    again = load_index(path)
    assert np.array_equal(index.matrix(), again.matrix())
    assert again.ids == index.ids and again.labels == index.labels
    assert again.vocab.names == index.vocab.names
    rng = np.random.default_rng(3)
    for _ in range(5):
        q = normalize(rng.standard_normal(index.dim))
        a = [(n.id, n.distance, n.label_id) for n in index.knn(q, 7)]
        b = [(n.id, n.distance, n.label_id) for n in again.knn(q, 7)]
        assert a == b


def test_load_rejects_dim_mismatch(tmp_path):
    index = make_cluster_index(seed=0, dim=6)
    path = tmp_path / "idx.npz"
    save_index(index, path)
    with pytest.raises(DimensionMismatchError) as exc:
        load_index(path, expect_dim=9)
    assert "9" in str(exc.value) and "6" in str(exc.value)


def test_load_rejects_corrupt_file(tmp_path):
    path = tmp_path / "broken.npz"
    path.write_bytes(b"this is not an npz archive")
    with pytest.raises(ConfigError):
        load_index(path)
