import numpy as np
import pytest

from textknn.corpus import split_dev
from textknn.encoder import EncoderConfig, TrainableEncoder, init_params
from textknn.index import EmbeddingIndex, build_index
from textknn.synthetic import make_token_disjoint
from textknn.trainer import TrainConfig, train

TINY_ENCODER = EncoderConfig(buckets=512, token_dim=16, hidden_dim=16, out_dim=16)
TINY_TRAIN = TrainConfig(epochs=4, batch_size=8, seed=1, encoder=TINY_ENCODER)


@pytest.fixture(scope="session")
def tiny_corpus():
    corpus = make_token_disjoint(n_docs=60, n_classes=3, seed=3, test_fraction=0.25)
    return split_dev(corpus, 0.15, seed=11)


@pytest.fixture(scope="session")
def tiny_trained(tiny_corpus):
    params, report = train(tiny_corpus, TINY_TRAIN)
    return params, report


@pytest.fixture(scope="session")
def tiny_index(tiny_corpus, tiny_trained):
    params, _ = tiny_trained
    encoder = TrainableEncoder(params)
    return encoder, build_index(encoder, tiny_corpus)


@pytest.fixture()
def untrained_encoder():
    return TrainableEncoder(init_params(TINY_ENCODER, seed=5))


def make_cluster_index(
    n_per_cluster=20, n_clusters=3, dim=8, spread=0.05, seed=0, vocab_names=None
):
    """Index of Gaussian clusters around orthogonal unit centers, labels by cluster."""
    from textknn.corpus import LabelVocab

    rng = np.random.default_rng(seed)
    names = vocab_names or [f"c{i}" for i in range(n_clusters)]
    vocab = LabelVocab(names)
    index = EmbeddingIndex(dim, vocab)
    doc_id = 0
    for c in range(n_clusters):
        center = np.zeros(dim)
        center[c] = 1.0
        for _ in range(n_per_cluster):
            index.add(doc_id, center + spread * rng.standard_normal(dim), c)
            doc_id += 1
    return index


# acceptance criterion reporting -------------------------------------------

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance):
        outcome = _acceptance[nodeid]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {nodeid.split('::')[-1]}")
