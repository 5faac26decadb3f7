"""CoNLL-U reading/writing and the dependency-tree data model.

Token indices are 1-based; node 0 is the dummy root.  Multi-word-token
ranges ("3-4") and empty nodes ("5.1") are kept as opaque rows so files
round-trip, but they never enter the dependency graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

SUBTYPE_SEP = ":"


class ConlluError(ValueError):
    """Malformed CoNLL-U input; ``line`` is 1-based within the parsed text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructureError(ConlluError):
    """Token indices are duplicated, gapped or out of order."""


class NotATreeError(ValueError):
    pass


def base_label(label: str, sep: str = SUBTYPE_SEP) -> str:
    """Strip a UD subtype: ``flat:name`` -> ``flat``."""
    return label.split(sep, 1)[0] if sep else label


def same_label(a: str, b: str, sep: str = SUBTYPE_SEP) -> bool:
    return base_label(a, sep) == base_label(b, sep)


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    head: int = 0
    deprel: str = "_"
    # columns 5, 6, 9, 10 kept verbatim
    xpos: str = "_"
    feats: str = "_"
    deps: str = "_"
    misc: str = "_"

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.head == self.index:
            raise ValueError(f"token {self.index} is its own head")
        if not self.deprel:
            raise ValueError(f"token {self.index} has an empty deprel")

    def columns(self) -> list[str]:
        return [str(self.index), self.form, self.lemma, self.upos, self.xpos,
                self.feats, str(self.head), self.deprel, self.deps, self.misc]


@dataclass(frozen=True)
class DepGraph:
    """Arrays are 0-padded: ``heads[k]`` / ``labels[k]`` for k = 1..n."""

    n: int
    heads: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.heads) != self.n + 1 or len(self.labels) != self.n + 1:
            raise ValueError("heads/labels must have length n + 1 (slot 0 unused)")
        for k in range(1, self.n + 1):
            if not 0 <= self.heads[k] <= self.n:
                raise ValueError(f"head of token {k} out of range: {self.heads[k]}")

    @classmethod
    def from_heads(cls, heads: Sequence[int], labels: Sequence[str] | None = None) -> "DepGraph":
        """Build from 1-based lists without the root slot, e.g. ``[5, 3, 1, ...]``."""
        n = len(heads)
        if labels is None:
            labels = ["dep"] * n
        return cls(n, (-1, *heads), ("", *labels))

    def arcs(self) -> list[tuple[int, int, str]]:
        return [(self.heads[k], k, self.labels[k]) for k in range(1, self.n + 1)]

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.n + 1)]
        for k in range(1, self.n + 1):
            kids[self.heads[k]].append(k)
        return kids


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    sent_id: str = ""
    raw_comments: tuple[str, ...] = ()
    # (number of tokens preceding the row, raw line) for MWT ranges / empty nodes
    extra_rows: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.index != pos:
                raise StructureError(f"token index {tok.index} found at position {pos}")

    def __len__(self):
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def graph(self) -> DepGraph:
        return DepGraph(len(self.tokens),
                        (-1, *(t.head for t in self.tokens)),
                        ("", *(t.deprel for t in self.tokens)))

    def with_graph(self, g: DepGraph, comments: Iterable[str] | None = None) -> "Sentence":
        toks = tuple(
            Token(t.index, t.form, t.lemma, t.upos, g.heads[t.index], g.labels[t.index],
                  t.xpos, t.feats, t.deps, t.misc)
            for t in self.tokens)
        return Sentence(toks, self.sent_id,
                        tuple(comments) if comments is not None else self.raw_comments,
                        self.extra_rows)


@dataclass(frozen=True)
class ValidationReport:
    is_tree: bool
    is_projective: bool
    root_children: int
    errors: tuple[tuple[int, str], ...] = field(default=())


def _parse_block(rows: list[tuple[int, str]]) -> Sentence:
    comments: list[str] = []
    extra: list[tuple[int, str]] = []
    tokens: list[Token] = []
    sent_id = ""
    for lineno, line in rows:
        if line.startswith("#"):
            comments.append(line)
            body = line[1:].strip()
            if body.startswith("sent_id"):
                key, _, val = body.partition("=")
                if key.strip() == "sent_id":
                    sent_id = val.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
        ident = cols[0]
        if "-" in ident or "." in ident:
            extra.append((len(tokens), line))
            continue
        try:
            index = int(ident)
        except ValueError:
            raise ConlluError(f"non-integer token id {ident!r}", lineno) from None
        if index != len(tokens) + 1:
            raise StructureError(f"token id {index} where {len(tokens) + 1} was expected", lineno)
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"non-integer head {cols[6]!r}", lineno) from None
        try:
            tokens.append(Token(index, cols[1], cols[2], cols[3], head, cols[7],
                                cols[4], cols[5], cols[8], cols[9]))
        except ValueError as e:
            raise ConlluError(str(e), lineno) from None
    n = len(tokens)
    for tok in tokens:
        if tok.head > n:
            raise StructureError(f"token {tok.index} has head {tok.head} beyond sentence length {n}")
    return Sentence(tuple(tokens), sent_id, tuple(comments), tuple(extra))


def parse_conllu(text: str) -> list[Sentence]:
    sentences = []
    block: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if line.strip() == "":
            if block:
                sentences.append(_parse_block(block))
                block = []
            continue
        block.append((lineno, line))
    if block:
        sentences.append(_parse_block(block))
    return sentences


def read_conllu(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f.read())


def write_conllu(sentences: Iterable[Sentence]) -> str:
    out = []
    for s in sentences:
        out.extend(s.raw_comments)
        extra = list(s.extra_rows)
        e = 0
        for pos, tok in enumerate(s.tokens):
            while e < len(extra) and extra[e][0] <= pos:
                out.append(extra[e][1])
                e += 1
            out.append("\t".join(tok.columns()))
        out.extend(line for _, line in extra[e:])
        out.append("")
    return "".join(line + "\n" for line in out)


def crossing_free(heads: Sequence[int]) -> bool:
    """Pairwise check that no two arcs cross; ``heads`` is 0-padded."""
    spans = [(min(heads[k], k), max(heads[k], k)) for k in range(1, len(heads))]
    for a, (l1, r1) in enumerate(spans):
        for l2, r2 in spans[a + 1:]:
            # exactly one endpoint strictly inside the other span
            if l1 < l2 < r1 < r2 or l2 < l1 < r2 < r1:
                return False
    return True


def validate_tree(g: DepGraph) -> ValidationReport:
    n = g.n
    errors: list[tuple[int, str]] = []
    root_children = sum(1 for k in range(1, n + 1) if g.heads[k] == 0)
    # walk up from every node; a node is fine once it reaches a node known to reach 0
    state = [0] * (n + 1)  # 0 unknown, 1 on current path, 2 reaches root
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        k = start
        while state[k] == 0:
            state[k] = 1
            path.append(k)
            k = g.heads[k]
        ok = state[k] == 2
        for p in path:
            state[p] = 2 if ok else 3
        if not ok and state[k] == 1:
            errors.append((start, "cycle"))
        elif not ok:
            errors.append((start, "not reachable from root"))
    for k in range(1, n + 1):
        if g.heads[k] == k:
            errors.append((k, "self-loop"))
    is_tree = not errors
    return ValidationReport(is_tree, crossing_free(g.heads), root_children, tuple(sorted(set(errors))))


def is_projective(g: DepGraph) -> bool:
    report = validate_tree(g)
    if not report.is_tree:
        raise NotATreeError(f"not a tree: {list(report.errors)}")
    return report.is_projective
