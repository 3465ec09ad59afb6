"""Text encoders mapping a document to a d-dimensional embedding.

Two implementations behind one contract: a trainable desk-scale encoder
(hashed unigram+bigram mean pool -> tanh MLP) and a loader for externally
produced per-document vectors. The trainable path also exposes the exact
analytic gradient of the pair regression loss, with both siamese towers
accumulating into the single tied parameter set.
"""
from __future__ import annotations

import json
import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Document
from .errors import (
    ConfigError,
    DegenerateCosineError,
    DimensionMismatchError,
    EmptyTokenError,
    UnknownIdError,
)

_TOKEN = re.compile(r"[a-z0-9]+")

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    buckets: int = 8192
    token_dim: int = 64
    hidden_dim: int = 64
    out_dim: int = 64

    def __post_init__(self):
        for name in ("buckets", "token_dim", "hidden_dim", "out_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class EncoderParams:
    """Trainable state: token table (buckets x token_dim) and a 2-layer MLP."""

    token_table: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {
            "token_table": self.token_table,
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
        }

    @property
    def config(self) -> EncoderConfig:
        return EncoderConfig(
            buckets=self.token_table.shape[0],
            token_dim=self.token_table.shape[1],
            hidden_dim=self.w1.shape[1],
            out_dim=self.w2.shape[1],
        )

    @property
    def out_dim(self) -> int:
        return self.w2.shape[1]

    def copy(self) -> "EncoderParams":
        return EncoderParams(**{k: v.copy() for k, v in self.as_dict().items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.as_dict().items()}


def init_params(config: EncoderConfig, seed) -> EncoderParams:
    """All entries drawn from seeded uniform(-0.05, 0.05); seed may be an int
    or a ready numpy Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = lambda *shape: rng.uniform(-0.05, 0.05, shape)
    return EncoderParams(
        token_table=u(config.buckets, config.token_dim),
        w1=u(config.token_dim, config.hidden_dim),
        b1=u(config.hidden_dim),
        w2=u(config.hidden_dim, config.out_dim),
        b2=u(config.out_dim),
    )


def _bucket(data: bytes, buckets: int) -> int:
    return zlib.crc32(data) % buckets


def tokenize(text: str, buckets: int) -> np.ndarray:
    """Lowercased word unigrams and bigrams hashed into bucket ids.

    Deterministic across runs (crc32, not the salted builtin hash). Raises
    EmptyTokenError when nothing alphanumeric survives normalization.
    """
    words = _TOKEN.findall(text.lower())
    if not words:
        raise EmptyTokenError(f"no tokens in text {text[:40]!r}")
    ids = [_bucket(b"u\x1f" + w.encode(), buckets) for w in words]
    ids.extend(
        _bucket(b"b\x1f" + a.encode() + b"\x1f" + b.encode(), buckets)
        for a, b in zip(words, words[1:])
    )
    return np.asarray(ids, dtype=np.intp)


def _forward(params: EncoderParams, token_ids: np.ndarray):
    """Forward pass returning the embedding plus the backprop cache."""
    x = params.token_table[token_ids].mean(axis=0)
    hact = np.tanh(x @ params.w1 + params.b1)
    out = hact @ params.w2 + params.b2
    return out, (x, hact)


def encode_tokens(params: EncoderParams, token_ids: np.ndarray) -> np.ndarray:
    return _forward(params, token_ids)[0]


def encode_text(params: EncoderParams, text: str) -> np.ndarray:
    return encode_tokens(params, tokenize(text, params.token_table.shape[0]))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with an exact fast path: bitwise-equal inputs give 1.0,
    making the self-pair loss and gradient exactly zero."""
    if a is b or np.array_equal(a, b):
        if not np.any(a):
            raise DegenerateCosineError("zero-norm embedding")
        return 1.0
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateCosineError("zero-norm embedding")
    return float(a @ b / (na * nb))


def pair_gradients(
    params: EncoderParams,
    tokens_a: np.ndarray,
    tokens_b: np.ndarray,
    target: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss (target - cos(e_a, e_b))^2 and its exact gradient for every parameter.

    The towers share weights, so both branches accumulate into one gradient set.
    """
    e_a, cache_a = _forward(params, tokens_a)
    e_b, cache_b = _forward(params, tokens_b)
    c = cosine(e_a, e_b)
    loss = (target - c) ** 2
    dc = 2.0 * (c - target)

    na = float(np.linalg.norm(e_a))
    nb = float(np.linalg.norm(e_b))
    g_ea = dc * (e_b / (na * nb) - c * e_a / (na * na))
    g_eb = dc * (e_a / (na * nb) - c * e_b / (nb * nb))

    grads = params.zeros_like()
    _backprop(params, tokens_a, cache_a, g_ea, grads)
    _backprop(params, tokens_b, cache_b, g_eb, grads)
    return float(loss), grads


def _backprop(params, token_ids, cache, g_out, grads):
    x, hact = cache
    grads["b2"] += g_out
    grads["w2"] += np.outer(hact, g_out)
    g_h = (params.w2 @ g_out) * (1.0 - hact * hact)
    grads["b1"] += g_h
    grads["w1"] += np.outer(x, g_h)
    g_x = params.w1 @ g_h
    np.add.at(grads["token_table"], token_ids, g_x / len(token_ids))


class TrainableEncoder:
    """Encoding facade over a parameter set."""

    def __init__(self, params: EncoderParams):
        self.params = params

    @property
    def dim(self) -> int:
        return self.params.out_dim

    def encode_document(self, doc: Document) -> np.ndarray:
        return encode_text(self.params, doc.text)

    def encode_text(self, text: str) -> np.ndarray:
        return encode_text(self.params, text)


class PrecomputedEncoder:
    """Serves externally produced vectors keyed by document id."""

    def __init__(self, vectors: dict[int, np.ndarray]):
        if not vectors:
            raise ConfigError("precomputed vector map is empty")
        dims = sorted({v.shape[0] for v in vectors.values()})
        if len(dims) != 1:
            raise DimensionMismatchError(dims[0], dims[-1], "precomputed vector")
        self.vectors = vectors
        self.dim = next(iter(vectors.values())).shape[0]

    def encode_document(self, doc: Document) -> np.ndarray:
        try:
            return self.vectors[doc.id]
        except KeyError:
            raise UnknownIdError(f"no precomputed vector for document {doc.id}") from None


def load_precomputed(path: str | Path) -> PrecomputedEncoder:
    """Read JSONL records {"id": int, "vector": [reals]}."""
    vectors: dict[int, np.ndarray] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            vectors[int(rec["id"])] = np.asarray(rec["vector"], dtype=np.float64)
    return PrecomputedEncoder(vectors)


def save_checkpoint(params: EncoderParams, path: str | Path) -> None:
    meta = {"version": CHECKPOINT_VERSION, **vars(params.config)}
    np.savez(path, meta=json.dumps(meta), **params.as_dict())


def load_checkpoint(path: str | Path, expect_dim: Optional[int] = None) -> EncoderParams:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {meta.get('version')!r}")
        params = EncoderParams(
            token_table=data["token_table"],
            w1=data["w1"],
            b1=data["b1"],
            w2=data["w2"],
            b2=data["b2"],
        )
    if expect_dim is not None and params.out_dim != expect_dim:
        raise DimensionMismatchError(expect_dim, params.out_dim, "checkpoint")
    return params
