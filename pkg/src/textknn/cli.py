"""Command-line entry points.

Subcommands: train, build-index, classify, eval, experiment, serve,
export-projection. Relative paths resolve against $TEXTKNN_DATA_DIR when it
is set, so pipelines can run from anywhere.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import TEST, LabeledCorpus, LabelVocab, load_corpus, split_dev
from .encoder import EncoderConfig, TrainableEncoder, load_checkpoint, load_precomputed, save_checkpoint
from .errors import ConfigError, EngineError
from .evaluator import (
    evaluate,
    run_heldout_class,
    run_incremental_data,
    run_subclass_transfer,
    timing_harness,
)
from .explainer import explain, export_projection_csv
from .index import build_index, load_index, save_index, select_k
from .service import ClassifierService, ServeConfig
from .trainer import TrainConfig, train

DATA_DIR_ENV = "TEXTKNN_DATA_DIR"


def data_path(p: str | Path) -> Path:
    p = Path(p)
    base = os.environ.get(DATA_DIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    parser.add_argument("--weight-decay", type=float, default=0.01)
    parser.add_argument("--beta1", type=float, default=0.9)
    parser.add_argument("--beta2", type=float, default=0.999)
    parser.add_argument("--eps", type=float, default=1e-8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--buckets", type=int, default=8192)
    parser.add_argument("--token-dim", type=int, default=64)
    parser.add_argument("--hidden-dim", type=int, default=64)
    parser.add_argument("--out-dim", type=int, default=64)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        weight_decay=args.weight_decay,
        beta1=args.beta1,
        beta2=args.beta2,
        eps=args.eps,
        seed=args.seed,
        encoder=EncoderConfig(
            buckets=args.buckets,
            token_dim=args.token_dim,
            hidden_dim=args.hidden_dim,
            out_dim=args.out_dim,
        ),
    )


def cmd_train(args) -> int:
    corpus = load_corpus(data_path(args.corpus), format=args.format)
    corpus = split_dev(corpus, args.dev_fraction, args.dev_seed, stratify=args.stratify)
    params, report = train(corpus, _train_config(args))
    save_checkpoint(params, data_path(args.checkpoint_out))
    if args.report_out:
        Path(data_path(args.report_out)).write_text(
            json.dumps(report.to_json_dict(), indent=2)
        )
    best = report.dev_spearman[report.best_epoch]
    print(f"trained {args.epochs} epochs; best epoch {report.best_epoch} dev rho {best:.4f}")
    print(f"checkpoint written to {data_path(args.checkpoint_out)}")
    return 0


def _load_encoder(args):
    if getattr(args, "precomputed", None):
        return load_precomputed(data_path(args.precomputed))
    return TrainableEncoder(load_checkpoint(data_path(args.checkpoint)))


def cmd_build_index(args) -> int:
    corpus = load_corpus(data_path(args.corpus), format=args.format)
    encoder = _load_encoder(args)
    index = build_index(encoder, corpus)
    save_index(index, data_path(args.out))
    print(f"indexed {len(index)} documents (dim {index.dim}) -> {data_path(args.out)}")
    return 0


def cmd_classify(args) -> int:
    index = load_index(data_path(args.index))
    encoder = TrainableEncoder(load_checkpoint(data_path(args.checkpoint), expect_dim=index.dim))
    texts = {}
    if args.corpus:
        texts = load_corpus(data_path(args.corpus), format=args.format).texts()
    k = args.k if args.k else min(5, len(index))
    _, record = explain(index, encoder, args.text, k, texts)
    print(json.dumps(record.to_json_dict(), indent=2))
    return 0


def cmd_eval(args) -> int:
    index = load_index(data_path(args.index))
    encoder = TrainableEncoder(load_checkpoint(data_path(args.checkpoint), expect_dim=index.dim))
    vocab = LabelVocab(index.vocab.names)
    test = load_corpus(data_path(args.test_corpus), format=args.format, split=TEST, vocab=vocab)
    docs = [d for d in test.documents if d.label_id is not None]
    if not docs:
        raise ConfigError("test corpus has no labeled documents")
    if args.select_k:
        dev = load_corpus(data_path(args.select_k), format=args.format, vocab=vocab)
        k, dev_acc = select_k(index, encoder, dev.documents)
        print(f"selected k={k} (dev accuracy {dev_acc:.4f})")
    else:
        k = args.k or min(5, len(index))
    report = evaluate(index, encoder, docs, vocab, k)
    print(report.render())
    if args.out:
        Path(data_path(args.out)).write_text(json.dumps(report.to_json_dict(), indent=2))
    return 0


def _experiment_corpus(cfg: dict) -> LabeledCorpus:
    if "synthetic" in cfg:
        from . import synthetic

        syn = dict(cfg["synthetic"])
        kind = syn.pop("kind", "token_disjoint")
        if kind == "token_disjoint":
            corpus = synthetic.make_token_disjoint(**syn)
        elif kind == "subclass":
            corpus, fine = synthetic.make_subclass(**syn)
            cfg["_fine_labels"] = fine
        else:
            raise ConfigError(f"unknown synthetic corpus kind {kind!r}")
    else:
        corpus = load_corpus(data_path(cfg["train_corpus"]), format=cfg.get("format", "tsv"))
    corpus = split_dev(
        corpus, cfg.get("dev_fraction", 0.1), cfg.get("dev_seed", 7),
        stratify=cfg.get("stratify", False),
    )
    if "test_corpus" in cfg:
        test = load_corpus(
            data_path(cfg["test_corpus"]), format=cfg.get("format", "tsv"),
            split=TEST, vocab=corpus.vocab,
        )
        offset = max(d.id for d in corpus.documents) + 1
        merged = corpus.documents + [replace(d, id=d.id + offset) for d in test.documents]
        corpus = LabeledCorpus(merged, corpus.vocab)
    return corpus


def _experiment_train_config(cfg: dict, seed: Optional[int] = None) -> TrainConfig:
    tcfg = dict(cfg.get("train", {}))
    enc = EncoderConfig(**tcfg.pop("encoder", {}))
    config = TrainConfig(encoder=enc, **tcfg)
    if seed is not None:
        config = replace(config, seed=seed)
    return config


def _fine_labels(cfg: dict, corpus: LabeledCorpus) -> dict[int, str]:
    if "_fine_labels" in cfg:
        return cfg["_fine_labels"]
    fine: dict[int, str] = {}
    path = data_path(cfg["subclass"]["fine_labels"])
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ConfigError(f"fine-labels line {line_no}: expected id<TAB>label")
            fine[int(parts[0])] = parts[1]
    return fine


def _mean_std(values) -> dict:
    return {"mean": float(np.mean(values)), "std": float(np.std(values))}


def cmd_experiment(args) -> int:
    cfg = json.loads(Path(data_path(args.config)).read_text())
    seeds = list(range(args.seeds)) if args.seeds else [None]
    runs = []
    for i, seed in enumerate(seeds):
        corpus = _experiment_corpus(dict(cfg))
        config = _experiment_train_config(cfg, seed)
        if args.kind == "heldout":
            result = run_heldout_class(corpus, cfg["heldout"]["hidden_class"], config)
            summary = {c: r.accuracy for c, r in result.reports.items()}
        elif args.kind == "incremental":
            fractions = cfg.get("incremental", {}).get("fractions", (5, 10, 20, 30, 40, 50, 60))
            result = run_incremental_data(corpus, config, fractions)
            summary = {f"x{r.fraction:g}": r.index_plus_plus for r in result.rows}
        elif args.kind == "subclass":
            full_cfg = dict(cfg)
            corpus = _experiment_corpus(full_cfg)
            result = run_subclass_transfer(corpus, _fine_labels(full_cfg, corpus), config)
            summary = {"fine_accuracy": result.fine_accuracy}
        elif args.kind == "timing":
            params, _ = train(corpus, config)
            encoder = TrainableEncoder(params)
            index = build_index(encoder, corpus)
            tcfg = cfg.get("timing", {})
            result = timing_harness(
                index, encoder, corpus.split_docs(TEST),
                k=tcfg.get("k", min(5, len(index))),
                batch_size=tcfg.get("batch_size", 32),
                repetitions=tcfg.get("repetitions", 3),
            )
            summary = {"encode_ms": result.encode_ms_mean, "lookup_ms": result.lookup_ms_mean}
        else:
            raise ConfigError(f"unknown experiment {args.kind!r}")
        runs.append({"seed": seed if seed is not None else config.seed,
                     "summary": summary, "result": result.to_json_dict()})
        print(f"run {i + 1}/{len(seeds)}:")
        print(result.render())

    payload: dict = {"experiment": args.kind, "runs": runs}
    if len(runs) > 1:
        keys = runs[0]["summary"].keys()
        payload["aggregate"] = {
            key: _mean_std([r["summary"][key] for r in runs]) for key in keys
        }
        print("aggregate over seeds:")
        for key, st in payload["aggregate"].items():
            print(f"  {key}: {st['mean']:.4f} +- {st['std']:.4f}")
    if args.out:
        Path(data_path(args.out)).write_text(json.dumps(payload, indent=2))
        print(f"wrote {data_path(args.out)}")
    return 0


def cmd_serve(args) -> int:
    config = ServeConfig(
        checkpoint=data_path(args.checkpoint),
        index=data_path(args.index),
        corpus=data_path(args.corpus),
        corpus_format=args.format,
        host=args.host,
        port=args.port,
        test_corpus=data_path(args.test_corpus) if args.test_corpus else None,
        test_format=args.format,
        k=args.k,
        audit_log=data_path(args.audit_log) if args.audit_log else None,
        static_dir=data_path(args.static_dir) if args.static_dir else None,
        projection_file=data_path(args.projection_file) if args.projection_file else None,
    )
    service = ClassifierService(config)
    print(f"serving on http://{service.host}:{service.port}/ "
          f"(index size {len(service.state.index)}, k={service.state.k})",
          flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.shutdown()
    return 0


def cmd_export_projection(args) -> int:
    index = load_index(data_path(args.index))
    export_projection_csv(index, data_path(args.out))
    print(f"wrote {len(index)} projected points to {data_path(args.out)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textknn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the encoder on a labeled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--dev-fraction", type=float, default=0.1)
    p.add_argument("--dev-seed", type=int, default=7)
    p.add_argument("--stratify", action="store_true")
    _add_train_flags(p)
    p.add_argument("--checkpoint-out", required=True)
    p.add_argument("--report-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("build-index", help="encode a corpus into a lookup index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--checkpoint")
    p.add_argument("--precomputed", help="JSONL id/vector file instead of a checkpoint")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("classify", help="classify one text with neighbor justification")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", help="corpus for neighbor texts")
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--text", required=True)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="accuracy and per-class report on a test corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--test-corpus", required=True)
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--k", type=int)
    p.add_argument("--select-k", metavar="DEV_CORPUS",
                   help="search k on this labeled dev corpus instead of --k")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run an incremental-learning experiment")
    p.add_argument("kind", choices=("heldout", "incremental", "subclass", "timing"))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seeds", type=int, default=0,
                   help="repeat with seeds 0..N-1 and report mean/std")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--test-corpus")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--k", type=int)
    p.add_argument("--audit-log")
    p.add_argument("--static-dir")
    p.add_argument("--projection-file",
                   help="serve these precomputed 2-D coordinates (CSV id,x,y[,label]) "
                        "instead of the built-in PCA")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export-projection", help="write the 2-D PCA projection as CSV")
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_projection)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
