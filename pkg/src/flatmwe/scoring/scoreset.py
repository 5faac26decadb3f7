"""Log-probability tables consumed by the decoders, plus the scores-jsonl format."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import log_softmax, logsumexp

from ..treebank import same_label

NEG_INF = -np.inf
TAG_INDEX = {"B": 0, "I": 1, "O": 2}
TAG_ORDER = ("B", "I", "O")


class VocabularyError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Score tables for one sentence, 1-based.

    attach: (n+1, n+1); attach[i, j] = log P(h_j = i); column 0 and the
        diagonal are -inf.
    tag: (n+1, 3) in B, I, O order; row 0 (the root) is all zeros.
    label: optional (n+1, n+1, R); label[i, j, r] = log P(r_j = r | h_j = i).
    """

    n: int
    attach: np.ndarray
    tag: np.ndarray
    label: np.ndarray | None = None
    rel_vocab: tuple[str, ...] = ("flat",)
    flat: str = "flat"
    sent_id: str = ""

    def __post_init__(self):
        n = self.n
        if self.attach.shape != (n + 1, n + 1):
            raise ValueError(f"attach shape {self.attach.shape}, expected {(n + 1, n + 1)}")
        if self.tag.shape != (n + 1, 3):
            raise ValueError(f"tag shape {self.tag.shape}, expected {(n + 1, 3)}")
        if self.label is not None and self.label.shape != (n + 1, n + 1, len(self.rel_vocab)):
            raise ValueError(f"label shape {self.label.shape} does not match rel_vocab")
        self.flat_index  # raises if flat is missing

    @property
    def labeled(self) -> bool:
        return self.label is not None

    @property
    def flat_index(self) -> int:
        return self.rel_index(self.flat)

    def rel_index(self, rel: str) -> int:
        for r, name in enumerate(self.rel_vocab):
            if name == rel:
                return r
        for r, name in enumerate(self.rel_vocab):
            if same_label(name, rel):
                return r
        raise VocabularyError(f"relation {rel!r} not in {list(self.rel_vocab)}")

    def is_normalized(self, tol: float = 1e-6) -> bool:
        n = self.n
        if n == 0:
            return True
        cols = logsumexp(self.attach[:, 1:], axis=0)
        rows = logsumexp(self.tag[1:], axis=1)
        ok = np.all(np.abs(cols) <= tol) and np.all(np.abs(rows) <= tol)
        if self.label is not None:
            mask = ~np.eye(n + 1, dtype=bool)
            mask[:, 0] = False
            lab = logsumexp(self.label, axis=2)[mask]
            ok = ok and np.all(np.abs(lab) <= tol)
        return bool(ok)


def mask_attach(raw: np.ndarray) -> np.ndarray:
    """Apply the no-self-loop / no-root-modifier mask and normalise each column."""
    s = np.array(raw, dtype=float, copy=True)
    np.fill_diagonal(s, NEG_INF)
    s[:, 0] = NEG_INF
    out = np.full_like(s, NEG_INF)
    if s.shape[0] > 1:
        out[:, 1:] = log_softmax(s[:, 1:], axis=0)
    return out


def random_scoreset(rng: np.random.Generator, n: int, labeled: bool = False,
                    rel_vocab: Sequence[str] = ("flat", "nsubj", "punct"),
                    flat: str = "flat", scale: float = 2.0) -> ScoreSet:
    """Normalised ScoreSet from Gaussian logits; used by tests and oracle checks."""
    attach = mask_attach(rng.normal(scale=scale, size=(n + 1, n + 1)))
    tag = np.zeros((n + 1, 3))
    tag[1:] = log_softmax(rng.normal(scale=scale, size=(n, 3)), axis=1)
    label = None
    if labeled:
        label = log_softmax(rng.normal(scale=scale, size=(n + 1, n + 1, len(rel_vocab))), axis=2)
    return ScoreSet(n, attach, tag, label, tuple(rel_vocab), flat)


def _enc(x: float):
    return None if x == NEG_INF else float(x)


def _dec(x) -> float:
    return NEG_INF if x is None else float(x)


def scoreset_to_json(sc: ScoreSet) -> dict:
    n = sc.n
    obj = {
        "sent_id": sc.sent_id,
        "n": n,
        "attach": [[_enc(sc.attach[i, j]) for j in range(1, n + 1)] for i in range(n + 1)],
        "tag": [[_enc(v) for v in sc.tag[j]] for j in range(1, n + 1)],
        "rel_vocab": list(sc.rel_vocab),
        "flat": sc.flat,
    }
    if sc.label is not None:
        obj["label"] = [[[_enc(v) for v in sc.label[i, j]] for j in range(1, n + 1)]
                        for i in range(n + 1)]
    return obj


def scoreset_from_json(obj: dict) -> ScoreSet:
    n = int(obj["n"])
    attach = np.full((n + 1, n + 1), NEG_INF)
    rows = obj["attach"]
    if len(rows) != n + 1 or any(len(r) != n for r in rows):
        raise ValueError("attach must be (n+1) rows of n entries")
    for i, row in enumerate(rows):
        attach[i, 1:] = [_dec(v) for v in row]
    tag = np.zeros((n + 1, 3))
    if len(obj["tag"]) != n:
        raise ValueError("tag must have n rows")
    for j, row in enumerate(obj["tag"], start=1):
        tag[j] = [_dec(v) for v in row]
    rel_vocab = tuple(obj.get("rel_vocab", ["flat"]))
    label = None
    if obj.get("label") is not None:
        label = np.full((n + 1, n + 1, len(rel_vocab)), NEG_INF)
        for i, row in enumerate(obj["label"]):
            for j, vals in enumerate(row, start=1):
                label[i, j] = [_dec(v) for v in vals]
    return ScoreSet(n, attach, tag, label, rel_vocab, obj.get("flat", "flat"), obj.get("sent_id", ""))


def write_scores_jsonl(scoresets: Iterable[ScoreSet]) -> str:
    return "".join(json.dumps(scoreset_to_json(sc), allow_nan=False) + "\n" for sc in scoresets)


def read_scores_jsonl(text: str) -> list[ScoreSet]:
    return [scoreset_from_json(json.loads(line)) for line in text.splitlines() if line.strip()]

