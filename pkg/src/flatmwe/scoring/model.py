"""Toy window encoder with biaffine attachment/label heads and a 3-way tagger.

All three heads read the same encoder output, so a jointly trained model
shares its word representations between the parser and the tagger.
Gradients are derived by hand; ``scoring.gradcheck`` checks them against
central finite differences of ``forward_loss``.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from ..headless import extract_spans, spans_to_bio
from ..treebank import DepGraph, Sentence, base_label
from .scoreset import TAG_INDEX, ScoreSet, VocabularyError, mask_attach

MAGIC = b"FLATDEC1"
FORMAT_VERSION = 1
UNK = "<unk>"


class ConfigError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


@dataclass
class ModelConfig:
    embed_dim: int = 100
    window: int = 1
    attach_dim: int = 500
    rel_dim: int = 100
    tag_hidden: int = 500
    # width of externally supplied vectors; None means use the embedding window
    external_dim: int | None = None

    @property
    def input_dim(self) -> int:
        if self.external_dim is not None:
            return self.external_dim
        return self.embed_dim * (2 * self.window + 1)


@dataclass
class ModelParams:
    config: ModelConfig
    vocab: dict[str, int]
    rel_vocab: tuple[str, ...]
    flat: str
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, dict(self.vocab), self.rel_vocab, self.flat,
                           {k: v.copy() for k, v in self.tensors.items()})

    def word_ids(self, words: Sequence[str]) -> np.ndarray:
        return np.array([self.vocab.get(w, 0) for w in words], dtype=np.int64)

    def check(self):
        t, c = self.tensors, self.config
        D = c.input_dim
        expect = {
            "attach_head.W": (c.attach_dim, D), "attach_mod.W": (c.attach_dim, D),
            "U_attach": (c.attach_dim + 1, c.attach_dim + 1),
            "rel_head.W": (c.rel_dim, D), "rel_mod.W": (c.rel_dim, D),
            "U_rel": (len(self.rel_vocab), c.rel_dim + 1, c.rel_dim + 1),
            "tag_hidden.W": (c.tag_hidden, D), "tag_out.W": (3, c.tag_hidden),
            "root": (D,),
        }
        for name, shape in expect.items():
            if t[name].shape != shape:
                raise ConfigError(f"{name} has shape {t[name].shape}, expected {shape}")


def _glorot(rng, fan_out, fan_in):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in))


def build_vocab(corpus: Iterable[Sentence]) -> dict[str, int]:
    vocab = {UNK: 0}
    for s in corpus:
        for w in s.forms:
            vocab.setdefault(w, len(vocab))
    return vocab


def build_rel_vocab(corpus: Iterable[Sentence], flat: str) -> tuple[str, ...]:
    rels = {base_label(flat)}
    for s in corpus:
        rels.update(base_label(t.deprel) for t in s.tokens)
    return tuple(sorted(rels))


def init_params(vocab: dict[str, int], rel_vocab: Sequence[str], flat: str,
                cfg: ModelConfig, rng: np.random.Generator) -> ModelParams:
    D = cfg.input_dim
    e = cfg.embed_dim
    t = {
        "embed": _glorot(rng, len(vocab), e),
        "pad": rng.uniform(-0.1, 0.1, size=e),
        "root": rng.uniform(-0.1, 0.1, size=D),
        "attach_head.W": _glorot(rng, cfg.attach_dim, D), "attach_head.b": np.zeros(cfg.attach_dim),
        "attach_mod.W": _glorot(rng, cfg.attach_dim, D), "attach_mod.b": np.zeros(cfg.attach_dim),
        "U_attach": _glorot(rng, cfg.attach_dim + 1, cfg.attach_dim + 1),
        "rel_head.W": _glorot(rng, cfg.rel_dim, D), "rel_head.b": np.zeros(cfg.rel_dim),
        "rel_mod.W": _glorot(rng, cfg.rel_dim, D), "rel_mod.b": np.zeros(cfg.rel_dim),
        "U_rel": np.stack([_glorot(rng, cfg.rel_dim + 1, cfg.rel_dim + 1) for _ in rel_vocab]),
        "tag_hidden.W": _glorot(rng, cfg.tag_hidden, D), "tag_hidden.b": np.zeros(cfg.tag_hidden),
        "tag_out.W": _glorot(rng, 3, cfg.tag_hidden), "tag_out.b": np.zeros(3),
    }
    if base_label(flat) not in [base_label(r) for r in rel_vocab]:
        raise VocabularyError(f"flat label {flat!r} missing from relation vocabulary")
    p = ModelParams(cfg, dict(vocab), tuple(rel_vocab), flat, t)
    p.check()
    return p


# ---------------------------------------------------------------------------
# forward


def encode(s: Sentence | Sequence[str], p: ModelParams, vectors: np.ndarray | None = None) -> np.ndarray:
    """Rows x_0..x_n: the learned root vector, then windowed embedding concatenations."""
    words = s.forms if isinstance(s, Sentence) else list(s)
    n = len(words)
    if vectors is not None:
        vectors = np.asarray(vectors, dtype=float)
        if vectors.shape != (n + 1, p.config.input_dim):
            raise ConfigError(f"external vectors have shape {vectors.shape}, "
                              f"expected {(n + 1, p.config.input_dim)}")
        return vectors
    w = p.config.window
    E, pad = p.tensors["embed"], p.tensors["pad"]
    ids = p.word_ids(words)
    X = np.empty((n + 1, p.config.input_dim))
    X[0] = p.tensors["root"]
    for k in range(1, n + 1):
        parts = []
        for pos in range(k - w, k + w + 1):
            parts.append(E[ids[pos - 1]] if 1 <= pos <= n else pad)
        X[k] = np.concatenate(parts)
    return X


def _mlp(X, p, name):
    Z = X @ p.tensors[name + ".W"].T + p.tensors[name + ".b"]
    return np.maximum(Z, 0.0), Z


def _affine1(H):
    return np.hstack([H, np.ones((H.shape[0], 1))])


def raw_attach(X: np.ndarray, p: ModelParams) -> np.ndarray:
    H, _ = _mlp(X, p, "attach_head")
    M, _ = _mlp(X, p, "attach_mod")
    U = p.tensors["U_attach"]
    if U.shape != (H.shape[1] + 1, M.shape[1] + 1):
        raise ConfigError(f"U_attach shape {U.shape} does not match MLP output {H.shape[1]}")
    return _affine1(H) @ U @ _affine1(M).T


def attach_scores(X: np.ndarray, p: ModelParams) -> np.ndarray:
    return mask_attach(raw_attach(X, p))


def label_scores(X: np.ndarray, p: ModelParams) -> np.ndarray:
    H, _ = _mlp(X, p, "rel_head")
    M, _ = _mlp(X, p, "rel_mod")
    U = p.tensors["U_rel"]
    if U.shape[1:] != (H.shape[1] + 1, M.shape[1] + 1):
        raise ConfigError(f"U_rel shape {U.shape} does not match MLP output {H.shape[1]}")
    V = np.einsum("id,rde,je->ijr", _affine1(H), U, _affine1(M))
    return log_softmax(V, axis=2)


def tag_scores(X: np.ndarray, p: ModelParams) -> np.ndarray:
    T, _ = _mlp(X[1:], p, "tag_hidden")
    logits = T @ p.tensors["tag_out.W"].T + p.tensors["tag_out.b"]
    out = np.zeros((X.shape[0], 3))
    out[1:] = log_softmax(logits, axis=1)
    return out


def scores_for(s: Sentence, p: ModelParams, vectors: np.ndarray | None = None,
               labeled: bool = True) -> ScoreSet:
    X = encode(s, p, vectors)
    n = X.shape[0] - 1
    return ScoreSet(n, attach_scores(X, p), tag_scores(X, p),
                    label_scores(X, p) if labeled else None,
                    p.rel_vocab, p.flat, getattr(s, "sent_id", ""))


# ---------------------------------------------------------------------------
# losses on score tables


def loss_parse(sc: ScoreSet, gold: DepGraph) -> float:
    total = 0.0
    for h, m, r in gold.arcs():
        total -= sc.attach[h, m]
        if sc.label is not None:
            total -= sc.label[h, m, sc.rel_index(r)]
    return float(total)


def loss_tag(sc: ScoreSet, gold: Sequence[str]) -> float:
    return float(-sum(sc.tag[k, TAG_INDEX[t]] for k, t in enumerate(gold, start=1)))


def loss_joint(sc: ScoreSet, gold_g: DepGraph, gold_t: Sequence[str], lam: float) -> float:
    return lam * loss_parse(sc, gold_g) + (1.0 - lam) * loss_tag(sc, gold_t)


def gold_tags(s: Sentence, flat: str) -> tuple:
    return spans_to_bio(len(s), extract_spans(s.graph(), flat, on_malformed="skip"))


# ---------------------------------------------------------------------------
# training objective and its gradient


def _dropout_masks(rng, rate, shape):
    if not rate or rng is None:
        return None
    keep = 1.0 - rate
    return [(rng.random(shape) < keep) / keep for _ in range(3)]


def forward_loss(p: ModelParams, s: Sentence, gold_g: DepGraph, gold_t: Sequence[str], lam: float,
                 label_loss: bool = True, vectors=None, masks=None) -> float:
    """L_joint straight from parameters (no caching); the finite-difference reference."""
    X = encode(s, p, vectors)
    Xa, Xr, Xt = (X, X, X) if masks is None else (X * masks[0], X * masks[1], X * masks[2])
    sc_attach = attach_scores(Xa, p)
    label = label_scores(Xr, p) if label_loss else None
    sc = ScoreSet(gold_g.n, sc_attach, tag_scores(Xt, p), label, p.rel_vocab, p.flat)
    return loss_joint(sc, gold_g, gold_t, lam)


def _relu_back(dH, Z, Xin, p, name, grads):
    dZ = dH * (Z > 0)
    grads[name + ".W"] += dZ.T @ Xin
    grads[name + ".b"] += dZ.sum(axis=0)
    return dZ @ p.tensors[name + ".W"]


def loss_and_gradients(p: ModelParams, s: Sentence, gold_g: DepGraph, gold_t: Sequence[str],
                       lam: float, label_loss: bool = True, vectors=None,
                       dropout_rng: np.random.Generator | None = None, dropout_rate: float = 0.0,
                       grads: dict | None = None) -> tuple[float, dict]:
    """Return L_joint and its gradient, accumulating into ``grads`` if given."""
    if grads is None:
        grads = {k: np.zeros_like(v) for k, v in p.tensors.items()}
    t = p.tensors
    X = encode(s, p, vectors)
    n = X.shape[0] - 1
    masks = _dropout_masks(dropout_rng, dropout_rate, X.shape)
    Xa, Xr, Xt = (X, X, X) if masks is None else (X * masks[0], X * masks[1], X * masks[2])
    dXa = np.zeros_like(X)
    dXr = np.zeros_like(X)
    dXt = np.zeros_like(X)
    heads = np.array(gold_g.heads[1:], dtype=np.int64)
    cols = np.arange(1, n + 1)
    loss = 0.0

    # attachment: column-wise softmax over candidate heads
    Ha, Zah = _mlp(Xa, p, "attach_head")
    Ma, Zam = _mlp(Xa, p, "attach_mod")
    Hh, Mh = _affine1(Ha), _affine1(Ma)
    U = t["U_attach"]
    S = Hh @ U @ Mh.T
    logP = mask_attach(S)
    loss += lam * -logP[heads, cols].sum()
    if lam:
        P = np.exp(logP)
        P[:, 0] = 0.0
        dS = lam * P
        dS[heads, cols] -= lam
        grads["U_attach"] += Hh.T @ dS @ Mh
        dHh = dS @ Mh @ U.T
        dMh = dS.T @ Hh @ U
        dXa += _relu_back(dHh[:, :-1], Zah, Xa, p, "attach_head", grads)
        dXa += _relu_back(dMh[:, :-1], Zam, Xa, p, "attach_mod", grads)

    # labels at the gold heads
    if label_loss:
        rels = np.array([_rel_id(p, r) for r in gold_g.labels[1:]], dtype=np.int64)
        Hr, Zrh = _mlp(Xr, p, "rel_head")
        Mr, Zrm = _mlp(Xr, p, "rel_mod")
        A = _affine1(Hr)[heads]
        B = _affine1(Mr)[1:]
        Ur = t["U_rel"]
        V = np.einsum("jd,rde,je->jr", A, Ur, B)
        logQ = log_softmax(V, axis=1)
        loss += lam * -logQ[np.arange(n), rels].sum()
        if lam:
            dV = lam * softmax(V, axis=1)
            dV[np.arange(n), rels] -= lam
            grads["U_rel"] += np.einsum("jr,jd,je->rde", dV, A, B)
            dA = np.einsum("jr,rde,je->jd", dV, Ur, B)
            dB = np.einsum("jr,rde,jd->je", dV, Ur, A)
            dHr = np.zeros((n + 1, A.shape[1]))
            np.add.at(dHr, heads, dA)
            dMr = np.zeros_like(dHr)
            dMr[1:] = dB
            dXr += _relu_back(dHr[:, :-1], Zrh, Xr, p, "rel_head", grads)
            dXr += _relu_back(dMr[:, :-1], Zrm, Xr, p, "rel_mod", grads)

    # tags
    tag_ids = np.array([TAG_INDEX[x] for x in gold_t], dtype=np.int64)
    T, Zt = _mlp(Xt[1:], p, "tag_hidden")
    logits = T @ t["tag_out.W"].T + t["tag_out.b"]
    logR = log_softmax(logits, axis=1)
    loss += (1.0 - lam) * -logR[np.arange(n), tag_ids].sum()
    if lam != 1.0:
        dL = (1.0 - lam) * np.exp(logR)
        dL[np.arange(n), tag_ids] -= 1.0 - lam
        grads["tag_out.W"] += dL.T @ T
        grads["tag_out.b"] += dL.sum(axis=0)
        dXt[1:] += _relu_back(dL @ t["tag_out.W"], Zt, Xt[1:], p, "tag_hidden", grads)

    if masks is not None:
        dX = dXa * masks[0] + dXr * masks[1] + dXt * masks[2]
    else:
        dX = dXa + dXr + dXt
    if vectors is None:
        _encoder_back(dX, s, p, grads)

    if not np.isfinite(loss):
        bad = [k for k, v in t.items() if not np.all(np.isfinite(v))]
        where = f" (non-finite parameters in {', '.join(bad)})" if bad else ""
        raise NumericalError(f"non-finite loss {loss}{where}")
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in {name}")
    return float(loss), grads


def _rel_id(p: ModelParams, r: str) -> int:
    b = base_label(r)
    for i, name in enumerate(p.rel_vocab):
        if name == r or base_label(name) == b:
            return i
    raise VocabularyError(f"gold relation {r!r} not in {list(p.rel_vocab)}")


def _encoder_back(dX, s, p, grads):
    grads["root"] += dX[0]
    w, e = p.config.window, p.config.embed_dim
    ids = p.word_ids(s.forms)
    n = len(ids)
    for k in range(1, n + 1):
        for slot, pos in enumerate(range(k - w, k + w + 1)):
            g = dX[k, slot * e:(slot + 1) * e]
            if 1 <= pos <= n:
                grads["embed"][ids[pos - 1]] += g
            else:
                grads["pad"] += g


def gradients(p: ModelParams, s: Sentence, gold_g: DepGraph, gold_t: Sequence[str], cfg,
              vectors=None, dropout_rng=None) -> dict:
    """Analytic gradient of L_joint under ``cfg`` (a TrainConfig)."""
    return loss_and_gradients(p, s, gold_g, gold_t, cfg.lam, cfg.label_loss, vectors,
                              dropout_rng, cfg.dropout_rate)[1]


# ---------------------------------------------------------------------------
# serialization


def save_params(p: ModelParams, path) -> None:
    meta = {"version": FORMAT_VERSION, "config": asdict(p.config), "vocab": p.vocab,
            "rel_vocab": list(p.rel_vocab), "flat": p.flat}
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(meta, sort_keys=True)), **p.tensors)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(buf.getvalue())


def load_params(path) -> ModelParams:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a model artifact (bad magic header)")
    with np.load(io.BytesIO(blob[len(MAGIC):]), allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model format version {meta.get('version')}")
        tensors = {k: z[k] for k in z.files if k != "__meta__"}
    p = ModelParams(ModelConfig(**meta["config"]), meta["vocab"], tuple(meta["rel_vocab"]),
                    meta["flat"], tensors)
    p.check()
    return p
