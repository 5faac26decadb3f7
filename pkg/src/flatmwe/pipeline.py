"""Score -> prediction for the three strategies (parse, tag, joint)."""

from __future__ import annotations

from dataclasses import dataclass

from .decode import decode_eisner, decode_joint, decode_tags
from .headless import HeadlessSpan, bio_to_spans, extract_spans, spans_to_bio
from .scoring.scoreset import ScoreSet
from .treebank import DepGraph

MODES = ("parse", "tag", "joint")


@dataclass(frozen=True)
class Prediction:
    graph: DepGraph
    tags: tuple
    spans: list[HeadlessSpan]


def predict(sc: ScoreSet, mode: str = "joint", single_root: bool = False,
            allow_punct_in_span: bool = False) -> Prediction:
    """parse: spans read off the Eisner tree; tag: spans from per-token
    argmax tags (the tree is still the Eisner parse); joint: both views
    from the joint decoder."""
    if mode == "parse":
        g = decode_eisner(sc, single_root=single_root)
        spans = extract_spans(g, sc.flat, on_malformed="skip")
        return Prediction(g, spans_to_bio(sc.n, spans), spans)
    if mode == "tag":
        tags = decode_tags(sc)
        return Prediction(decode_eisner(sc, single_root=single_root), tags, bio_to_spans(tags))
    if mode == "joint":
        r = decode_joint(sc, single_root=single_root, allow_punct_in_span=allow_punct_in_span)
        return Prediction(r.graph, r.tags, bio_to_spans(r.tags))
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
