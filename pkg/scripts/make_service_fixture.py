#!/usr/bin/env python3
"""Write ready-to-serve artifacts (checkpoint, index, corpora) into a directory.

Used by the frontend e2e tests to stand up a service quickly; the encoder is
untrained (deterministic random init), which is enough for UI round-trips.
"""
import argparse
from pathlib import Path

from textknn.corpus import TEST, LabeledCorpus, save_corpus
from textknn.encoder import EncoderConfig, TrainableEncoder, init_params, save_checkpoint
from textknn.index import build_index, save_index
from textknn.synthetic import make_token_disjoint


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--docs", type=int, default=1430)
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = make_token_disjoint(
        n_docs=args.docs, n_classes=args.classes, seed=args.seed, test_fraction=0.3
    )
    config = EncoderConfig(buckets=2048, token_dim=32, hidden_dim=32, out_dim=32)
    params = init_params(config, seed=args.seed)
    index = build_index(TrainableEncoder(params), corpus)

    save_checkpoint(params, out / "enc.npz")
    save_index(index, out / "index.npz")
    train_docs = [d for d in corpus.documents if d.split != TEST]
    save_corpus(LabeledCorpus(train_docs, corpus.vocab), out / "train.tsv")
    save_corpus(LabeledCorpus(corpus.split_docs(TEST), corpus.vocab), out / "test.tsv")
    print(f"fixture with {len(index)} indexed docs in {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
