"""Siamese training loop for the pair-similarity regression objective.

Per epoch: draw a fresh pair sample, take AdamW steps on the mean of
(target - cosine)^2 over each mini-batch, then score the frozen dev pair set
by Spearman correlation between predicted cosines and the 0/1 targets. The
returned parameters are those of the best dev-correlation epoch.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import DEV, TRAIN, LabeledCorpus
from .encoder import (
    EncoderConfig,
    EncoderParams,
    cosine,
    init_params,
    pair_gradients,
    tokenize,
)
from .errors import ConfigError, TrainingDivergedError, UndefinedCorrelationError
from .sampler import PairSample, sample_epoch

cosine_similarity = cosine


def pair_loss(y_hat: float, y: int) -> float:
    """Squared error between target and predicted cosine."""
    if y not in (0, 1):
        raise ConfigError(f"pair target must be 0 or 1, got {y!r}")
    return (y - y_hat) ** 2


def _ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of the rank-transformed sequences."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2:
        raise ConfigError("spearman needs two equal-length sequences of length >= 2")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    rx = _ranks(xs)
    ry = _ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    return float(rx @ ry / np.sqrt((rx @ rx) * (ry @ ry)))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")


@dataclass
class TrainReport:
    epoch_losses: list[float]
    dev_spearman: list[float]
    best_epoch: int

    def to_json_dict(self) -> dict:
        return asdict(self)


class AdamW:
    """Adam with decoupled weight decay: the decay term uses the pre-step
    parameter value and is not fed through the moment estimates."""

    def __init__(self, params: EncoderParams, lr: float, weight_decay: float,
                 beta1: float, beta2: float, eps: float):
        self.lr = lr
        self.wd = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: EncoderParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in params.as_dict().items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            adaptive = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p -= self.lr * (adaptive + self.wd * p)


class _TokenCache:
    def __init__(self, corpus: LabeledCorpus, buckets: int):
        self.buckets = buckets
        self._texts = corpus.texts()
        self._cache: dict[int, np.ndarray] = {}

    def __getitem__(self, doc_id: int) -> np.ndarray:
        toks = self._cache.get(doc_id)
        if toks is None:
            toks = self._cache[doc_id] = tokenize(self._texts[doc_id], self.buckets)
        return toks


def batch_gradients(
    params: EncoderParams,
    tokens: _TokenCache | dict,
    batch: Sequence[PairSample],
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean loss over the batch and the gradient of that mean."""
    total = params.zeros_like()
    loss_sum = 0.0
    for pair in batch:
        loss, grads = pair_gradients(
            params, tokens[pair.anchor_id], tokens[pair.other_id], float(pair.target)
        )
        loss_sum += loss
        for name in total:
            total[name] += grads[name]
    scale = 1.0 / len(batch)
    for name in total:
        total[name] *= scale
    return loss_sum * scale, total


def dev_pair_set(corpus: LabeledCorpus, seed) -> list[PairSample]:
    """One sampling pass over the dev split, frozen for all epochs."""
    dev_docs = corpus.split_docs(DEV)
    if not dev_docs:
        raise ConfigError("no dev split; run split_dev before training")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dev_view = LabeledCorpus([replace(d, split=TRAIN) for d in dev_docs], corpus.vocab)
    return sample_epoch(dev_view, rng)


def dev_rho(params: EncoderParams, tokens, dev_pairs: Sequence[PairSample]) -> float:
    """Spearman between predicted cosines and pair targets; nan when undefined."""
    from .encoder import encode_tokens

    y_hat = []
    for pair in dev_pairs:
        e_a = encode_tokens(params, tokens[pair.anchor_id])
        e_b = encode_tokens(params, tokens[pair.other_id])
        y_hat.append(cosine(e_a, e_b))
    targets = [float(p.target) for p in dev_pairs]
    try:
        return spearman(y_hat, targets)
    except UndefinedCorrelationError:
        return float("nan")


def train(corpus: LabeledCorpus, config: TrainConfig) -> tuple[EncoderParams, TrainReport]:
    """Train on the corpus train split; model selection on dev Spearman.

    Deterministic for a fixed config: the seed feeds parameter init, the dev
    pair draw, and every epoch's pair sampling through one seed sequence.
    """
    config.validate()
    seq = np.random.SeedSequence(config.seed)
    init_seq, dev_seq, epoch_root = seq.spawn(3)

    params = init_params(config.encoder, np.random.default_rng(init_seq))
    tokens = _TokenCache(corpus, config.encoder.buckets)
    dev_pairs = dev_pair_set(corpus, np.random.default_rng(dev_seq))
    optimizer = AdamW(
        params, config.learning_rate, config.weight_decay,
        config.beta1, config.beta2, config.eps,
    )

    epoch_losses: list[float] = []
    rhos: list[float] = []
    best_epoch = 0
    best_rho = -np.inf
    best_params = None
    epoch_seqs = epoch_root.spawn(config.epochs)
    for epoch in range(config.epochs):
        rng = np.random.default_rng(epoch_seqs[epoch])
        pairs = sample_epoch(corpus, rng)
        loss_sum = 0.0
        for b, start in enumerate(range(0, len(pairs), config.batch_size)):
            batch = pairs[start : start + config.batch_size]
            mean_loss, grads = batch_gradients(params, tokens, batch)
            if not np.isfinite(mean_loss):
                raise TrainingDivergedError(epoch, b)
            optimizer.step(params, grads)
            loss_sum += mean_loss * len(batch)
        epoch_losses.append(loss_sum / len(pairs))
        rho = dev_rho(params, tokens, dev_pairs)
        rhos.append(rho)
        if best_params is None or (np.isfinite(rho) and rho > best_rho):
            best_params = params.copy()
            best_epoch = epoch
            best_rho = rho if np.isfinite(rho) else -np.inf
    return best_params, TrainReport(epoch_losses, rhos, best_epoch)
