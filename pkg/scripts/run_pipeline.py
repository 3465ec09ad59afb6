#!/usr/bin/env python3
"""End-to-end pipeline on a synthetic task: train, index, pick k, evaluate,
and print one neighbor-justified prediction.

Run from the repo root after `pip install -e .`:
    python scripts/run_pipeline.py --docs 300 --classes 3
"""
import argparse
import time

from textknn.corpus import DEV, TEST, split_dev
from textknn.encoder import TrainableEncoder
from textknn.evaluator import evaluate
from textknn.explainer import explain
from textknn.index import build_index, select_k
from textknn.synthetic import make_token_disjoint
from textknn.trainer import TrainConfig, train


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=300)
    parser.add_argument("--classes", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=20)
    args = parser.parse_args()

    corpus = make_token_disjoint(n_docs=args.docs, n_classes=args.classes, seed=args.seed)
    corpus = split_dev(corpus, 0.1, seed=7)
    config = TrainConfig(epochs=args.epochs, seed=args.seed)

    started = time.perf_counter()
    params, report = train(corpus, config)
    print(f"trained {args.epochs} epochs in {time.perf_counter() - started:.1f}s; "
          f"best epoch {report.best_epoch}, "
          f"dev rank correlation {report.dev_spearman[report.best_epoch]:.4f}")

    encoder = TrainableEncoder(params)
    index = build_index(encoder, corpus)
    k, dev_acc = select_k(index, encoder, corpus.split_docs(DEV))
    print(f"selected k={k} (dev accuracy {dev_acc:.4f}, index size {len(index)})")

    result = evaluate(index, encoder, corpus.split_docs(TEST), corpus.vocab, k)
    print(result.render())

    sample = corpus.split_docs(TEST)[0]
    _, record = explain(index, encoder, sample.text, k, corpus.texts(),
                        true_label=corpus.vocab.name_of(sample.label_id))
    print(f"\nsample query: {record.query_text!r}")
    print(f"predicted {record.predicted_label} (true {record.true_label})")
    for n in record.neighbors:
        mark = "=" if n.agrees_with_prediction else "!"
        print(f"  {mark} d={n.distance:.4f} [{n.label}] {n.text}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
