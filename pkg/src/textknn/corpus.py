"""Labeled text corpora: loading, validation, dev splitting, duplicate detection.

A corpus is immutable after load; derived corpora (dev splits, subsets) are new
objects sharing Document instances.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, EmptyCorpusError, ParseError

TRAIN, DEV, TEST = "train", "dev", "test"
_SPLITS = (TRAIN, DEV, TEST)

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class Document:
    id: int
    text: str
    label_id: Optional[int] = None
    split: str = TRAIN

    def __post_init__(self):
        if self.split not in _SPLITS:
            raise ConfigError(f"unknown split {self.split!r}")


class LabelVocab:
    """Bidirectional label-name <-> dense id map. Append-only: ids are never reused,
    so adding a class later is a pure append."""

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        """Return the id for name, appending it if unseen."""
        if name in self._ids:
            return self._ids[name]
        new_id = len(self._names)
        self._names.append(name)
        self._ids[name] = new_id
        return new_id

    def id_of(self, name: str) -> int:
        return self._ids[name]

    def name_of(self, label_id: int) -> str:
        return self._names[label_id]

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelVocab) and self._names == other._names

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)

    def copy(self) -> "LabelVocab":
        return LabelVocab(self._names)


@dataclass
class LabeledCorpus:
    documents: list[Document]
    vocab: LabelVocab = field(default_factory=LabelVocab)

    def __post_init__(self):
        self.validate()

    def validate(self):
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ConfigError(f"duplicate document id {doc.id}")
            seen.add(doc.id)
            if not doc.text.strip():
                raise ConfigError(f"document {doc.id} has empty text")
            if doc.label_id is None:
                if doc.split in (TRAIN, DEV):
                    raise ConfigError(f"document {doc.id} in split {doc.split} lacks a label")
            elif not 0 <= doc.label_id < len(self.vocab):
                raise ConfigError(f"document {doc.id} label id {doc.label_id} outside vocab")

    @property
    def n(self) -> int:
        """Number of train-split documents."""
        return sum(1 for d in self.documents if d.split == TRAIN)

    def split_docs(self, split: str) -> list[Document]:
        return [d for d in self.documents if d.split == split]

    def by_id(self, doc_id: int) -> Document:
        for d in self.documents:
            if d.id == doc_id:
                return d
        raise KeyError(doc_id)

    def texts(self) -> dict[int, str]:
        return {d.id: d.text for d in self.documents}


def _records_tsv(lines: Iterable[str]):
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            yield line_no, parts[0], None
        elif len(parts) == 2:
            yield line_no, parts[0], parts[1] or None
        else:
            raise ParseError(line_no, f"expected 1 or 2 tab-separated fields, got {len(parts)}")


def _records_jsonl(lines: Iterable[str]):
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(rec, dict) or "text" not in rec:
            raise ParseError(line_no, "record must be an object with a 'text' field")
        label = rec.get("label")
        if label is not None and not isinstance(label, str):
            raise ParseError(line_no, "'label' must be a string or null")
        if not isinstance(rec["text"], str):
            raise ParseError(line_no, "'text' must be a string")
        yield line_no, rec["text"], label


def load_corpus(
    path: str | Path,
    format: str = "tsv",
    split: str = TRAIN,
    vocab: Optional[LabelVocab] = None,
) -> LabeledCorpus:
    """Load a TSV (text<TAB>label) or JSONL ({"text":..., "label":...}) corpus.

    Ids are assigned in file order starting at 0 (offset past an existing vocab's
    corpus when merging is the caller's concern). Unseen label names are appended
    to the vocab in first-occurrence order. Labels may be omitted only when
    loading as the test split.
    """
    if format not in ("tsv", "jsonl"):
        raise ConfigError(f"unknown corpus format {format!r}")
    if split not in _SPLITS:
        raise ConfigError(f"unknown split {split!r}")
    path = Path(path)
    records = _records_tsv if format == "tsv" else _records_jsonl
    vocab = vocab if vocab is not None else LabelVocab()
    docs: list[Document] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, text, label in records(fh):
            if not text.strip():
                raise ParseError(line_no, "empty text field")
            if label is None and split in (TRAIN, DEV):
                raise ParseError(line_no, f"missing label for {split}-split document")
            label_id = vocab.add(label) if label is not None else None
            docs.append(Document(id=len(docs), text=text, label_id=label_id, split=split))
    if not docs:
        raise EmptyCorpusError(f"no documents in {path}")
    return LabeledCorpus(docs, vocab)


def save_corpus(corpus: LabeledCorpus, path: str | Path, format: str = "tsv") -> None:
    """Write documents in order as text/label records (split membership is not stored)."""
    if format not in ("tsv", "jsonl"):
        raise ConfigError(f"unknown corpus format {format!r}")
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            label = corpus.vocab.name_of(doc.label_id) if doc.label_id is not None else None
            if format == "tsv":
                fh.write(doc.text if label is None else f"{doc.text}\t{label}")
                fh.write("\n")
            else:
                fh.write(json.dumps({"text": doc.text, "label": label}) + "\n")


def split_dev(
    corpus: LabeledCorpus, fraction: float, seed: int, stratify: bool = False
) -> LabeledCorpus:
    """Reassign floor(fraction*n) train documents to the dev split via seeded shuffle.

    Test documents pass through untouched; a corpus that already has a dev
    split is rejected. With stratify=True the quota is taken per class
    (floor(fraction*count) each), so the total may differ from the
    unstratified count.
    """
    if not 0 < fraction < 1:
        raise ConfigError(f"dev fraction must lie in (0,1), got {fraction}")
    if any(d.split == DEV for d in corpus.documents):
        raise ConfigError("corpus already has a dev split")
    rng = np.random.default_rng(seed)
    positions = [p for p, d in enumerate(corpus.documents) if d.split == TRAIN]
    chosen: set[int] = set()
    if stratify:
        for label_id in range(len(corpus.vocab)):
            members = [p for p in positions if corpus.documents[p].label_id == label_id]
            take = int(fraction * len(members))
            picked = rng.permutation(len(members))[:take]
            chosen.update(members[i] for i in picked)
    else:
        take = int(fraction * corpus.n)
        if take < 1:
            raise ConfigError(
                f"fraction {fraction} of {corpus.n} train docs selects zero dev documents"
            )
        picked = rng.permutation(len(positions))[:take]
        chosen.update(positions[i] for i in picked)
    if not chosen:
        raise ConfigError("stratified dev split selected zero documents")
    docs = [
        replace(d, split=DEV) if pos in chosen else d
        for pos, d in enumerate(corpus.documents)
    ]
    return LabeledCorpus(docs, corpus.vocab)


def normalize_text(text: str) -> str:
    """Trim and collapse internal whitespace; the equivalence key for dedup."""
    return _WS.sub(" ", text.strip())


def find_exact_duplicates(corpus: LabeledCorpus) -> list[list[int]]:
    """Groups (size >= 2) of document ids sharing identical normalized text."""
    groups: dict[str, list[int]] = {}
    for doc in corpus.documents:
        groups.setdefault(normalize_text(doc.text), []).append(doc.id)
    return [sorted(ids) for ids in groups.values() if len(ids) >= 2]


def subset_corpus(corpus: LabeledCorpus, keep: Sequence[int]) -> LabeledCorpus:
    """New corpus restricted to the given document ids (order preserved)."""
    keep_set = set(keep)
    return LabeledCorpus([d for d in corpus.documents if d.id in keep_set], corpus.vocab)
