"""Exact-match span P/R/F1 and attachment scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .treebank import DepGraph, same_label


@dataclass(frozen=True)
class SpanPRF:
    true_positives: int
    predicted_count: int
    gold_count: int

    @property
    def precision(self) -> float:
        return self.true_positives / self.predicted_count if self.predicted_count else 1.0

    @property
    def recall(self) -> float:
        return self.true_positives / self.gold_count if self.gold_count else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "SpanPRF") -> "SpanPRF":
        return SpanPRF(self.true_positives + other.true_positives,
                       self.predicted_count + other.predicted_count,
                       self.gold_count + other.gold_count)


@dataclass(frozen=True)
class AttachmentScores:
    uas: float
    las: float
    token_count: int


def span_prf(gold: Sequence[Sequence], pred: Sequence[Sequence]) -> SpanPRF:
    """Micro-averaged over sentences; a span counts only with identical boundaries."""
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, prediction has {len(pred)}")
    tp = npred = ngold = 0
    for g, p in zip(gold, pred):
        gs = {tuple(x) for x in g}
        ps = {tuple(x) for x in p}
        tp += len(gs & ps)
        npred += len(ps)
        ngold += len(gs)
    return SpanPRF(tp, npred, ngold)


def attachment_scores(gold: Sequence[DepGraph], pred: Sequence[DepGraph], labels: bool = True) -> AttachmentScores:
    """UAS/LAS in percent over all tokens, punctuation included."""
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, prediction has {len(pred)}")
    total = uas = las = 0
    for g, p in zip(gold, pred):
        if g.n != p.n:
            raise ValueError(f"sentence length mismatch: {g.n} vs {p.n}")
        for k in range(1, g.n + 1):
            total += 1
            if g.heads[k] == p.heads[k]:
                uas += 1
                if not labels or same_label(g.labels[k], p.labels[k]):
                    las += 1
    if not total:
        return AttachmentScores(100.0, 100.0, 0)
    return AttachmentScores(100.0 * uas / total, 100.0 * las / total, total)


def report_kv(prf: SpanPRF | None = None, att: AttachmentScores | None = None) -> str:
    rows = []
    if prf is not None:
        rows += [("span_tp", prf.true_positives), ("span_pred", prf.predicted_count),
                 ("span_gold", prf.gold_count), ("span_precision", f"{100 * prf.precision:.2f}"),
                 ("span_recall", f"{100 * prf.recall:.2f}"), ("span_f1", f"{100 * prf.f1:.2f}")]
    if att is not None:
        rows += [("tokens", att.token_count), ("uas", f"{att.uas:.2f}"), ("las", f"{att.las:.2f}")]
    return "".join(f"{k}={v}\n" for k, v in rows)


def report_table(prf: SpanPRF | None = None, att: AttachmentScores | None = None) -> str:
    rows = [(k, str(v)) for k, v in (line.split("=", 1) for line in report_kv(prf, att).splitlines())]
    width = max(len(k) for k, _ in rows)
    vw = max(len(v) for _, v in rows)
    return "".join(f"{k.ljust(width)}  {v.rjust(vw)}\n" for k, v in rows)
