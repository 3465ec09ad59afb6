#!/usr/bin/env python3
"""Emit synthetic token-disjoint corpora as TSV files for pipeline runs.

Writes train.tsv and test.tsv (plus fine_labels.tsv with --fine) into the
output directory; the files feed the textknn CLI directly.
"""
import argparse
from pathlib import Path

from textknn.corpus import TEST, LabeledCorpus, save_corpus
from textknn.synthetic import make_subclass, make_token_disjoint


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--docs", type=int, default=300)
    parser.add_argument("--classes", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--test-fraction", type=float, default=0.3)
    parser.add_argument("--fine", action="store_true",
                        help="nested fine labels (2 per coarse class)")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.fine:
        corpus, fine = make_subclass(
            n_docs=args.docs, n_coarse=args.classes, seed=args.seed,
            test_fraction=args.test_fraction,
        )
        with (out / "fine_labels.tsv").open("w", encoding="utf-8") as fh:
            for doc_id, name in sorted(fine.items()):
                fh.write(f"{doc_id}\t{name}\n")
    else:
        corpus = make_token_disjoint(
            n_docs=args.docs, n_classes=args.classes, seed=args.seed,
            test_fraction=args.test_fraction,
        )
    train_docs = [d for d in corpus.documents if d.split != TEST]
    save_corpus(LabeledCorpus(train_docs, corpus.vocab), out / "train.tsv")
    save_corpus(LabeledCorpus(corpus.split_docs(TEST), corpus.vocab), out / "test.tsv")
    print(f"wrote {len(train_docs)} train docs and "
          f"{len(corpus.split_docs(TEST))} test docs to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
