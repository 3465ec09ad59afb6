"""Accuracy/F1 reporting and the incremental-learning experiment runners.

All runners are deterministic under a fixed config seed, and every report
renders both as a JSON-ready dict and as an aligned text table. Conditions
that use differently shaped label vocabularies are compared by class NAME,
never by raw label id.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .corpus import DEV, TEST, TRAIN, Document, LabeledCorpus, LabelVocab
from .encoder import TrainableEncoder
from .errors import ConfigError, EmptyBatchError
from .index import EmbeddingIndex, build_index, normalize, select_k
from .trainer import TrainConfig, train

HELD_OUT, INDEX_PLUS_PLUS, FULL = "held_out", "index_plus_plus", "full"


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    accuracy: float
    per_class: dict[str, ClassMetrics]
    total_support: int

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "total_support": self.total_support,
            "per_class": {
                name: vars(m) for name, m in self.per_class.items()
            },
        }

    def render(self) -> str:
        width = max([len(n) for n in self.per_class] + [8])
        lines = [f"{'class':<{width}}  prec   recall f1     support"]
        for name, m in self.per_class.items():
            lines.append(
                f"{name:<{width}}  {m.precision:<6.4f} {m.recall:<6.4f} "
                f"{m.f1:<6.4f} {m.support}"
            )
        lines.append(f"accuracy {self.accuracy:.4f} over {self.total_support} documents")
        return "\n".join(lines)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(
    index: EmbeddingIndex,
    encoder,
    docs: Sequence[Document],
    doc_vocab: LabelVocab,
    k: int,
) -> EvalReport:
    """Classify every doc and aggregate accuracy plus per-class P/R/F1.

    Truth labels resolve through doc_vocab, predictions through the index
    vocab; rows appear for every class with support or predictions.
    """
    if not docs:
        raise ConfigError("evaluation needs at least one labeled document")
    if any(d.label_id is None for d in docs):
        raise ConfigError("evaluation documents must be labeled")
    truths, preds = [], []
    for doc in docs:
        query = normalize(encoder.encode_document(doc))
        pred = index.classify(query, k)
        preds.append(index.vocab.name_of(pred.label_id))
        truths.append(doc_vocab.name_of(doc.label_id))

    classes = [n for n in doc_vocab.names if n in set(truths) | set(preds)]
    classes += [n for n in index.vocab.names if n in set(preds) and n not in classes]
    per_class = {}
    for name in classes:
        tp = sum(1 for t, p in zip(truths, preds) if t == name and p == name)
        fp = sum(1 for t, p in zip(truths, preds) if t != name and p == name)
        fn = sum(1 for t, p in zip(truths, preds) if t == name and p != name)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class[name] = ClassMetrics(precision, recall, _f1(precision, recall), tp + fn)
    accuracy = sum(1 for t, p in zip(truths, preds) if t == p) / len(docs)
    return EvalReport(accuracy, per_class, len(docs))


def _remap(docs: Sequence[Document], src: LabelVocab, dst: LabelVocab) -> list[Document]:
    return [replace(d, label_id=dst.id_of(src.name_of(d.label_id))) for d in docs]


@dataclass
class HeldoutReport:
    hidden_class: str
    reports: dict[str, EvalReport]
    hidden_in_vocab: dict[str, bool]
    hidden_class_f1: dict[str, Optional[float]]
    k_used: dict[str, int]

    def to_json_dict(self) -> dict:
        return {
            "hidden_class": self.hidden_class,
            "hidden_in_vocab": self.hidden_in_vocab,
            "hidden_class_f1": self.hidden_class_f1,
            "k_used": self.k_used,
            "reports": {c: r.to_json_dict() for c, r in self.reports.items()},
        }

    def render(self) -> str:
        conditions = [HELD_OUT, INDEX_PLUS_PLUS, FULL]
        classes = list(self.reports[FULL].per_class)
        width = max(len(c) for c in classes + ["accuracy"])
        head = f"{'class':<{width}}  " + "  ".join(f"{c:>15}" for c in conditions)
        lines = [f"hidden class: {self.hidden_class}", head]
        for name in classes:
            cells = []
            for cond in conditions:
                m = self.reports[cond].per_class.get(name)
                if name == self.hidden_class and self.hidden_class_f1[cond] is None:
                    cells.append(f"{'-':>15}")
                else:
                    cells.append(f"{(m.f1 if m else 0.0):>15.4f}")
            lines.append(f"{name:<{width}}  " + "  ".join(cells))
        lines.append(
            f"{'accuracy':<{width}}  "
            + "  ".join(f"{self.reports[c].accuracy:>15.4f}" for c in conditions)
        )
        return "\n".join(lines)


def run_heldout_class(
    corpus: LabeledCorpus, hidden_class: str, config: TrainConfig
) -> HeldoutReport:
    """Three conditions sharing one test set: the class hidden everywhere,
    hidden from training but appended to the index, and fully trained."""
    if len(corpus.vocab) < 3:
        raise ConfigError("held-out experiment needs at least 3 classes")
    if hidden_class not in corpus.vocab:
        raise ConfigError(f"hidden class {hidden_class!r} not in corpus")
    hidden_id = corpus.vocab.id_of(hidden_class)
    test_docs = corpus.split_docs(TEST)
    dev_docs = corpus.split_docs(DEV)
    if not test_docs or not dev_docs:
        raise ConfigError("held-out experiment needs dev and test splits")

    # condition vocab without the hidden class, in original first-occurrence order
    cond_vocab = LabelVocab(n for n in corpus.vocab.names if n != hidden_class)
    visible = [d for d in corpus.documents if d.split != TEST and d.label_id != hidden_id]
    heldout_corpus = LabeledCorpus(_remap(visible, corpus.vocab, cond_vocab), cond_vocab)

    params_h, _ = train(heldout_corpus, config)
    encoder_h = TrainableEncoder(params_h)
    index_h = build_index(encoder_h, heldout_corpus)
    k_h, _ = select_k(index_h, encoder_h, heldout_corpus.split_docs(DEV))
    report_h = evaluate(index_h, encoder_h, test_docs, corpus.vocab, k_h)

    index_pp = index_h.copy()
    pp_hidden_id = index_pp.vocab.add(hidden_class)
    for doc in corpus.split_docs(TRAIN):
        if doc.label_id == hidden_id:
            index_pp.add(doc.id, encoder_h.encode_document(doc), pp_hidden_id)
    pp_dev_labels = [index_pp.vocab.id_of(corpus.vocab.name_of(d.label_id)) for d in dev_docs]
    k_pp, _ = select_k(index_pp, encoder_h, dev_docs, labels=pp_dev_labels)
    report_pp = evaluate(index_pp, encoder_h, test_docs, corpus.vocab, k_pp)

    params_f, _ = train(corpus, config)
    encoder_f = TrainableEncoder(params_f)
    index_f = build_index(encoder_f, corpus)
    k_f, _ = select_k(index_f, encoder_f, dev_docs)
    report_f = evaluate(index_f, encoder_f, test_docs, corpus.vocab, k_f)

    reports = {HELD_OUT: report_h, INDEX_PLUS_PLUS: report_pp, FULL: report_f}
    f1_of = lambda rep: rep.per_class[hidden_class].f1 if hidden_class in rep.per_class else 0.0
    return HeldoutReport(
        hidden_class=hidden_class,
        reports=reports,
        hidden_in_vocab={
            HELD_OUT: hidden_class in index_h.vocab,
            INDEX_PLUS_PLUS: hidden_class in index_pp.vocab,
            FULL: hidden_class in index_f.vocab,
        },
        hidden_class_f1={
            HELD_OUT: None,
            INDEX_PLUS_PLUS: f1_of(report_pp),
            FULL: f1_of(report_f),
        },
        k_used={HELD_OUT: k_h, INDEX_PLUS_PLUS: k_pp, FULL: k_f},
    )


@dataclass
class IncrementalRow:
    fraction: float
    subset_only: float
    index_plus_plus: float
    full_reference: float
    k_subset: int
    k_index_plus_plus: int


@dataclass
class IncrementalReport:
    rows: list[IncrementalRow]
    full_reference: float
    k_full: int

    def to_json_dict(self) -> dict:
        return {
            "full_reference": self.full_reference,
            "k_full": self.k_full,
            "rows": [vars(r) for r in self.rows],
        }

    def render(self) -> str:
        lines = ["fraction%  subset_only  index++  full"]
        for r in self.rows:
            lines.append(
                f"{r.fraction:>8.0f}  {r.subset_only:>11.4f}  {r.index_plus_plus:>7.4f}"
                f"  {r.full_reference:.4f}"
            )
        return "\n".join(lines)


def run_incremental_data(
    corpus: LabeledCorpus,
    config: TrainConfig,
    fractions: Sequence[float] = (5, 10, 20, 30, 40, 50, 60),
    max_retries: int = 100,
) -> IncrementalReport:
    """Train on x% of the train split, then extend the index with the
    remaining (100-x)% encoded by the x%-trained encoder.

    Every class must appear in each subset; the subset draw is reseeded up to
    max_retries times to satisfy that, as a constraint rather than a method.
    """
    for x in fractions:
        if not 0 < x < 100:
            raise ConfigError(f"fractions must lie in (0, 100), got {x}")
    train_docs = corpus.split_docs(TRAIN)
    dev_docs = corpus.split_docs(DEV)
    test_docs = corpus.split_docs(TEST)
    if not train_docs or not dev_docs or not test_docs:
        raise ConfigError("incremental experiment needs train, dev and test splits")
    class_ids = {d.label_id for d in train_docs}

    params_f, _ = train(corpus, config)
    encoder_f = TrainableEncoder(params_f)
    index_f = build_index(encoder_f, corpus)
    k_full, _ = select_k(index_f, encoder_f, dev_docs)
    acc_full = evaluate(index_f, encoder_f, test_docs, corpus.vocab, k_full).accuracy

    rows = []
    for x in fractions:
        take = int(len(train_docs) * x / 100.0)
        subset = None
        for attempt in range(max_retries):
            rng = np.random.default_rng([config.seed, int(x * 100), attempt])
            picked = rng.permutation(len(train_docs))[:take]
            candidate = [train_docs[i] for i in sorted(picked)]
            if {d.label_id for d in candidate} == class_ids:
                subset = candidate
                break
        if subset is None:
            raise ConfigError(
                f"could not draw a {x}% subset covering all {len(class_ids)} classes"
            )
        sub_corpus = LabeledCorpus(subset + dev_docs, corpus.vocab)
        params_x, _ = train(sub_corpus, config)
        encoder_x = TrainableEncoder(params_x)
        index_x = build_index(encoder_x, sub_corpus)
        k_x, _ = select_k(index_x, encoder_x, dev_docs)
        acc_x = evaluate(index_x, encoder_x, test_docs, corpus.vocab, k_x).accuracy

        extended = index_x.copy()
        in_subset = {d.id for d in subset}
        for doc in train_docs:
            if doc.id not in in_subset:
                extended.add(doc.id, encoder_x.encode_document(doc), doc.label_id)
        k_pp, _ = select_k(extended, encoder_x, dev_docs)
        acc_pp = evaluate(extended, encoder_x, test_docs, corpus.vocab, k_pp).accuracy
        rows.append(IncrementalRow(x, acc_x, acc_pp, acc_full, k_x, k_pp))
    return IncrementalReport(rows, acc_full, k_full)


@dataclass
class SubclassReport:
    fine_accuracy: float
    k: int
    report: EvalReport

    def to_json_dict(self) -> dict:
        return {"fine_accuracy": self.fine_accuracy, "k": self.k,
                "report": self.report.to_json_dict()}

    def render(self) -> str:
        return f"fine-label accuracy {self.fine_accuracy:.4f} (k={self.k})\n" + self.report.render()


def run_subclass_transfer(
    corpus: LabeledCorpus, fine_labels: dict[int, str], config: TrainConfig
) -> SubclassReport:
    """Train on the corpus's coarse labels, tag index rows with fine labels,
    vote over fine labels, report fine accuracy."""
    missing = [d.id for d in corpus.documents if d.id not in fine_labels]
    if missing:
        raise ConfigError(f"missing fine labels for documents {missing[:5]}")
    nests: dict[str, set[str]] = {}
    for d in corpus.documents:
        nests.setdefault(fine_labels[d.id], set()).add(corpus.vocab.name_of(d.label_id))
    violations = {f: sorted(cs) for f, cs in nests.items() if len(cs) > 1}
    if violations:
        raise ConfigError(f"fine labels spanning multiple coarse classes: {violations}")

    params, _ = train(corpus, config)
    encoder = TrainableEncoder(params)
    fine_vocab = LabelVocab()
    for d in corpus.documents:
        fine_vocab.add(fine_labels[d.id])

    index = EmbeddingIndex(encoder.dim, fine_vocab)
    for doc in corpus.split_docs(TRAIN):
        index.add(doc.id, encoder.encode_document(doc), fine_vocab.id_of(fine_labels[doc.id]))
    dev_docs = corpus.split_docs(DEV)
    test_docs = corpus.split_docs(TEST)
    if not dev_docs or not test_docs:
        raise ConfigError("subclass experiment needs dev and test splits")
    k, _ = select_k(
        index, encoder, dev_docs,
        labels=[fine_vocab.id_of(fine_labels[d.id]) for d in dev_docs],
    )
    fine_test = [replace(d, label_id=fine_vocab.id_of(fine_labels[d.id])) for d in test_docs]
    report = evaluate(index, encoder, fine_test, fine_vocab, k)
    return SubclassReport(report.accuracy, k, report)


@dataclass
class TimingReport:
    encode_ms_mean: float
    encode_ms_std: float
    lookup_ms_mean: float
    lookup_ms_std: float
    repetitions: int
    n_docs: int
    k: int
    index_size: int

    def to_json_dict(self) -> dict:
        return vars(self)

    def render(self) -> str:
        return (
            f"per-doc encode {self.encode_ms_mean:.3f} ms (std {self.encode_ms_std:.3f}), "
            f"lookup {self.lookup_ms_mean:.3f} ms (std {self.lookup_ms_std:.3f}) "
            f"over {self.repetitions} reps, {self.n_docs} docs, index size {self.index_size}, "
            f"k={self.k}"
        )


def timing_harness(
    index: EmbeddingIndex,
    encoder,
    docs: Sequence[Document],
    k: int,
    batch_size: int = 32,
    repetitions: int = 3,
) -> TimingReport:
    """Mean per-doc wall-clock latency, encode vs lookup, over >= 3 repetitions
    after a warm-up pass."""
    if not docs:
        raise EmptyBatchError("timing harness needs at least one document")
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1")
    # warm-up
    warm = [normalize(encoder.encode_document(d)) for d in docs[:batch_size]]
    for q in warm:
        index.classify(q, k)

    encode_ms, lookup_ms = [], []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        queries = []
        for start in range(0, len(docs), batch_size):
            for d in docs[start : start + batch_size]:
                queries.append(normalize(encoder.encode_document(d)))
        t1 = time.perf_counter()
        for q in queries:
            index.classify(q, k)
        t2 = time.perf_counter()
        encode_ms.append((t1 - t0) / len(docs) * 1000.0)
        lookup_ms.append((t2 - t1) / len(docs) * 1000.0)
    return TimingReport(
        float(np.mean(encode_ms)), float(np.std(encode_ms)),
        float(np.mean(lookup_ms)), float(np.std(lookup_ms)),
        repetitions, len(docs), k, len(index),
    )
