#!/usr/bin/env python3
"""Run the three incremental-learning experiments plus the timing harness on
one synthetic task and write machine-readable JSON next to the printed tables.

    python scripts/run_experiments.py --out-dir results/
"""
import argparse
import json
from pathlib import Path

from textknn.corpus import DEV, TEST, split_dev
from textknn.encoder import TrainableEncoder
from textknn.evaluator import (
    run_heldout_class,
    run_incremental_data,
    run_subclass_transfer,
    timing_harness,
)
from textknn.index import build_index, select_k
from textknn.synthetic import make_subclass, make_token_disjoint
from textknn.trainer import TrainConfig, train


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--docs", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=20)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = TrainConfig(epochs=args.epochs, seed=args.seed)

    corpus = make_token_disjoint(n_docs=args.docs, n_classes=3, seed=args.seed)
    corpus = split_dev(corpus, 0.1, seed=7)

    print("== incremental data ==")
    inc = run_incremental_data(corpus, config)
    print(inc.render())
    (out / "incremental.json").write_text(json.dumps(inc.to_json_dict(), indent=2))

    print("\n== held-out class ==")
    held = run_heldout_class(corpus, corpus.vocab.name_of(1), config)
    print(held.render())
    (out / "heldout.json").write_text(json.dumps(held.to_json_dict(), indent=2))

    print("\n== sub-class transfer ==")
    sub_corpus, fine = make_subclass(n_docs=args.docs + 60, seed=args.seed)
    sub_corpus = split_dev(sub_corpus, 0.1, seed=7)
    sub = run_subclass_transfer(sub_corpus, fine, config)
    print(sub.render())
    (out / "subclass.json").write_text(json.dumps(sub.to_json_dict(), indent=2))

    print("\n== timing ==")
    params, _ = train(corpus, config)
    encoder = TrainableEncoder(params)
    index = build_index(encoder, corpus)
    k, _ = select_k(index, encoder, corpus.split_docs(DEV))
    timing = timing_harness(index, encoder, corpus.split_docs(TEST), k=k)
    print(timing.render())
    (out / "timing.json").write_text(json.dumps(timing.to_json_dict(), indent=2))
    print(f"\nJSON written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
