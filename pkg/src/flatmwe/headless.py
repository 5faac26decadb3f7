"""Tree view <-> tag view of headless (flat) multi-word spans.

A headless span [i, j] is encoded in a tree by attaching every token
i+1..j to i with the flat label, and in a tag sequence as B I...I.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence, Union

from .treebank import DepGraph, Sentence, same_label

TAGS = ("B", "I", "O")
PUNCT = "punct"


class HeadlessSpan(NamedTuple):
    start: int
    end: int


TagSeq = tuple  # of "B" / "I" / "O"


class MalformedFlatError(ValueError):
    def __init__(self, arcs):
        self.arcs = list(arcs)
        super().__init__(f"leftward or root-attached flat arcs (head, dependent): {self.arcs}")


def _graph(x: Union[DepGraph, Sentence]) -> DepGraph:
    return x.graph() if isinstance(x, Sentence) else x


def extract_spans(g: Union[DepGraph, Sentence], flat_label: str = "flat",
                  on_malformed: str = "raise") -> list[HeadlessSpan]:
    """Spans covered by the longest flat arc out of each head.

    Overlapping candidates (only possible in malformed trees) are resolved
    by keeping the longer covering arc, then the leftmost.  Leftward flat
    arcs, and flat arcs out of the root node, raise ``MalformedFlatError``
    unless ``on_malformed="skip"``.
    """
    g = _graph(g)
    reach: dict[int, int] = {}
    bad = []
    for h, m, r in g.arcs():
        if not same_label(r, flat_label):
            continue
        if m < h or h == 0:
            bad.append((h, m))
            continue
        reach[h] = max(reach.get(h, h), m)
    if bad and on_malformed == "raise":
        raise MalformedFlatError(bad)
    candidates = sorted(reach.items(), key=lambda hm: (-(hm[1] - hm[0]), hm[0]))
    taken = [False] * (g.n + 2)
    spans = []
    for i, j in candidates:
        if any(taken[i:j + 1]):
            continue
        for k in range(i, j + 1):
            taken[k] = True
        spans.append(HeadlessSpan(i, j))
    return sorted(spans)


def spans_to_bio(n: int, spans: Iterable[Sequence[int]]) -> TagSeq:
    tags = ["O"] * n
    for i, j in spans:
        if not 1 <= i < j <= n:
            raise ValueError(f"span ({i}, {j}) is not a multi-word span within 1..{n}")
        if any(t != "O" for t in tags[i - 1:j]):
            raise ValueError(f"span ({i}, {j}) overlaps another span")
        tags[i - 1] = "B"
        for k in range(i, j):
            tags[k] = "I"
    return tuple(tags)


def bio_to_spans(tags: Sequence[str]) -> list[HeadlessSpan]:
    """Read spans off a possibly ill-formed tag sequence.

    An I with no preceding B/I opens a span of its own; single-token spans
    are dropped.
    """
    spans = []
    start = None
    for k, t in enumerate(tags, start=1):
        if t == "B" or (t == "I" and start is None):
            if start is not None:
                spans.append((start, k - 1))
            start = k
        elif t == "O":
            if start is not None:
                spans.append((start, k - 1))
            start = None
        elif t != "I":
            raise ValueError(f"unknown tag {t!r} at position {k}")
    if start is not None:
        spans.append((start, len(tags)))
    return [HeadlessSpan(i, j) for i, j in spans if j > i]


def consistent(g: Union[DepGraph, Sentence], tags: Sequence[str], flat_label: str = "flat") -> bool:
    g = _graph(g)
    if len(tags) != g.n:
        return False
    return set(extract_spans(g, flat_label, on_malformed="skip")) == set(bio_to_spans(tags))


@dataclass(frozen=True)
class ComplianceResult:
    has_flat: bool
    leaf_ok: bool
    common_head_ok: bool
    violations: tuple[tuple[int, int], ...] = ()

    @property
    def compliant(self) -> bool:
        return self.leaf_ok and self.common_head_ok


def check_compliance(s: Union[Sentence, DepGraph], flat_label: str = "flat") -> ComplianceResult:
    """Check the two well-formedness properties of flat structures.

    Property 1: flat-attached tokens are leaves.  Property 2: every token
    inside an extracted span attaches to the span start with the flat or
    punct label (a leftward or root-attached flat arc also breaks property 2).
    """
    g = _graph(s)
    kids = g.children()
    violations = []
    has_flat = False
    for h, m, r in g.arcs():
        if same_label(r, flat_label):
            has_flat = True
            if kids[m]:
                violations.append((m, 1))
            if m < h or h == 0:
                violations.append((m, 2))
    for i, j in extract_spans(g, flat_label, on_malformed="skip"):
        for k in range(i + 1, j + 1):
            r = g.labels[k]
            if g.heads[k] != i or not (same_label(r, flat_label) or same_label(r, PUNCT)):
                violations.append((k, 2))
    violations = tuple(sorted(set(violations)))
    return ComplianceResult(
        has_flat=has_flat,
        leaf_ok=not any(p == 1 for _, p in violations),
        common_head_ok=not any(p == 2 for _, p in violations),
        violations=violations,
    )


@dataclass(frozen=True)
class StatsReport:
    token_count: int = 0
    flat_arc_count: int = 0
    headless_span_count: int = 0
    span_token_count: int = 0
    sentence_count: int = 0
    sentences_with_flat: int = 0
    compliant_sentences_with_flat: int = 0

    @property
    def flat_arc_pct(self) -> float:
        return 100.0 * self.flat_arc_count / self.token_count if self.token_count else 0.0

    @property
    def avg_span_length(self) -> float:
        return self.span_token_count / self.headless_span_count if self.headless_span_count else 0.0

    @property
    def compliance_ratio(self) -> float:
        if not self.sentences_with_flat:
            return 100.0
        return 100.0 * self.compliant_sentences_with_flat / self.sentences_with_flat

    def __add__(self, other: "StatsReport") -> "StatsReport":
        a, b = asdict(self), asdict(other)
        return StatsReport(**{k: a[k] + b[k] for k in a})

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(flat_arc_pct=round(self.flat_arc_pct, 4),
                 avg_span_length=round(self.avg_span_length, 4),
                 compliance_ratio=round(self.compliance_ratio, 4))
        return d

    def to_kv(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.as_dict().items())

    def to_table(self, name: str = "corpus") -> str:
        header = ["Treebank", "# tokens", "# headless arcs", "%", "# headless spans",
                  "Average span length", "Compliance ratio"]
        row = [name, f"{self.token_count:,}", f"{self.flat_arc_count:,}", f"{self.flat_arc_pct:.2f}%",
               f"{self.headless_span_count:,}", f"{self.avg_span_length:.2f}",
               f"{self.compliance_ratio:.2f}%"]
        widths = [max(len(a), len(b)) for a, b in zip(header, row)]
        fmt = lambda cells: "  ".join(c.rjust(w) if i else c.ljust(w)
                                      for i, (c, w) in enumerate(zip(cells, widths)))
        return fmt(header) + "\n" + fmt(row) + "\n"


def sentence_stats(s: Sentence, flat_label: str = "flat") -> StatsReport:
    g = s.graph()
    flat_arcs = sum(1 for _, _, r in g.arcs() if same_label(r, flat_label))
    spans = extract_spans(g, flat_label, on_malformed="skip")
    compliant = False
    if flat_arcs:
        compliant = check_compliance(g, flat_label).compliant
    return StatsReport(
        token_count=g.n,
        flat_arc_count=flat_arcs,
        headless_span_count=len(spans),
        span_token_count=sum(j - i + 1 for i, j in spans),
        sentence_count=1,
        sentences_with_flat=int(flat_arcs > 0),
        compliant_sentences_with_flat=int(flat_arcs > 0 and compliant),
    )


def corpus_stats(corpus: Iterable[Sentence], flat_label: str = "flat") -> StatsReport:
    total = StatsReport()
    for s in corpus:
        total = total + sentence_stats(s, flat_label)
    return total


def spans_tsv(sentences: Iterable[Sentence], span_lists: Iterable[Sequence[HeadlessSpan]]) -> str:
    """One row per span: sent_id, start, end, surface text."""
    lines = []
    for s, spans in zip(sentences, span_lists):
        for i, j in spans:
            text = " ".join(s.tokens[k - 1].form for k in range(i, j + 1))
            lines.append(f"{s.sent_id}\t{i}\t{j}\t{text}\n")
    return "".join(lines)


def format_span_comment(spans: Sequence[HeadlessSpan]) -> str:
    return "# mwe_spans = " + ",".join(f"{i}:{j}" for i, j in spans)


def parse_span_comment(comments: Sequence[str]) -> list[HeadlessSpan] | None:
    for c in comments:
        body = c[1:].strip()
        key, _, val = body.partition("=")
        if key.strip() == "mwe_spans":
            val = val.strip()
            if not val:
                return []
            out = []
            for part in val.split(","):
                i, _, j = part.partition(":")
                out.append(HeadlessSpan(int(i), int(j)))
            return out
    return None
