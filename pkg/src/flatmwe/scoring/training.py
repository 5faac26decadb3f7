from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..treebank import Sentence
from .model import (ModelConfig, ModelParams, build_rel_vocab, build_vocab, forward_loss,
                    gold_tags, init_params, loss_and_gradients)

log = logging.getLogger(__name__)

LAMBDA_GRID = (0.02, 0.05, 0.1, 0.3, 0.5, 0.9)


class TrainingError(RuntimeError):
    pass


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator per named consumer, all derived from one seed."""
    return np.random.default_rng([seed, zlib.crc32(name.encode("utf-8"))])


@dataclass
class TrainConfig:
    lam: float = 0.5
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 30
    patience: int = 5
    seed: int = 1
    dropout_rate: float = 0.0
    label_loss: bool = True
    beta1: float = 0.9
    beta2: float = 0.9
    eps: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")


class Adam:
    def __init__(self, params: ModelParams, lr: float, beta1: float, beta2: float, eps: float):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            params.tensors[k] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _split(corpus, dev):
    if dev is not None:
        return list(corpus), list(dev)
    corpus = list(corpus)
    if len(corpus) < 10:
        return corpus, corpus
    return ([s for i, s in enumerate(corpus) if i % 10 != 9],
            [s for i, s in enumerate(corpus) if i % 10 == 9])


def corpus_loss(p: ModelParams, corpus: Sequence[Sentence], cfg: TrainConfig, vectors=None) -> float:
    total = 0.0
    for idx, s in enumerate(corpus):
        vec = None if vectors is None else vectors[idx]
        total += forward_loss(p, s, s.graph(), gold_tags(s, p.flat), cfg.lam, cfg.label_loss, vec)
    return total


def train(corpus: Sequence[Sentence], cfg: TrainConfig, model_cfg: ModelConfig | None = None,
          flat: str = "flat", dev: Sequence[Sentence] | None = None,
          init: ModelParams | None = None, history: list | None = None) -> ModelParams:
    """Adam on L_joint; lr x0.1 after ``patience`` epochs without dev improvement.

    Returns a copy of the parameters with the lowest dev loss.  Without an
    explicit dev set every tenth sentence is held out (the whole corpus for
    fewer than ten sentences).
    """
    if not corpus:
        raise ValueError("empty training corpus")
    train_set, dev_set = _split(corpus, dev)
    model_cfg = model_cfg or ModelConfig()
    if init is None:
        vocab = build_vocab(train_set)
        rels = build_rel_vocab(list(train_set) + list(dev_set), flat)
        params = init_params(vocab, rels, flat, model_cfg, rng_stream(cfg.seed, "init"))
    else:
        params = init.copy()
    order_rng = rng_stream(cfg.seed, "shuffle")
    drop_rng = rng_stream(cfg.seed, "dropout") if cfg.dropout_rate else None
    opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    golds = [(s.graph(), gold_tags(s, flat)) for s in train_set]
    best_loss = corpus_loss(params, dev_set, cfg)
    best = params.copy()
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = order_rng.permutation(len(train_set))
        train_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            grads = {k: np.zeros_like(v) for k, v in params.tensors.items()}
            for idx in order[start:start + cfg.batch_size]:
                g, t = golds[idx]
                loss, _ = loss_and_gradients(params, train_set[idx], g, t, cfg.lam, cfg.label_loss,
                                             dropout_rng=drop_rng, dropout_rate=cfg.dropout_rate,
                                             grads=grads)
                train_loss += loss
            opt.step(params, grads)
        if not np.isfinite(train_loss):
            raise TrainingError(f"training diverged at epoch {epoch}")
        dev_loss = corpus_loss(params, dev_set, cfg)
        if not np.isfinite(dev_loss):
            raise TrainingError(f"dev loss diverged at epoch {epoch}")
        improved = dev_loss < best_loss
        if improved:
            best_loss, best, stale = dev_loss, params.copy(), 0
        else:
            stale += 1
            if stale >= cfg.patience:
                opt.lr *= 0.1
                stale = 0
        log.info("epoch %d train %.4f dev %.4f lr %.2e%s", epoch, train_loss, dev_loss, opt.lr,
                 " *" if improved else "")
        if history is not None:
            history.append({"epoch": epoch, "train_loss": train_loss, "dev_loss": dev_loss, "lr": opt.lr})
    return best
