"""Eisner, independent-tagging and joint tree/tag decoding over a ScoreSet.

The joint decoder is Eisner's O(n^3) chart with one extra axiom: a
complete right triangle (i, j) may be introduced directly for a headless
span, scored by ``span_delta(i, j)``.  Word-level right triangles (i, i)
carry the O-tag score of word i, so every word receives exactly one tag
score and the chart only ever builds tree/tag pairs that agree.

Canonical tie-break (shared with the brute-force oracles): among
structures whose scores agree to within 1e-12 (relative), prefer the
lexicographically smallest head array (h_1 most significant), then the
smallest tag sequence under O < B < I.  The chart carries this key as an
exact integer penalty next to each score, so the choice is global, not
greedy.  Arc labels are the per-arc argmax, ties going to the label that
comes first in ``rel_vocab``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .headless import PUNCT, bio_to_spans, consistent
from .scoring.scoreset import NEG_INF, TAG_INDEX, ScoreSet
from .treebank import DepGraph, validate_tree

UNLABELED = "dep"
TIE_RTOL = 1e-12
_TAG_CODE = {"O": 0, "B": 1, "I": 2}
_MWE = -1


class InfeasibleError(ValueError):
    pass


class OracleLimitError(ValueError):
    pass


class ChartItem(NamedTuple):
    kind: str  # "right-triangle", "left-triangle", "right-trapezoid", "left-trapezoid"
    left: int
    right: int
    score: float
    back: tuple  # (rule, split) ; split == -1 marks an R-mwe axiom


@dataclass(frozen=True)
class JointResult:
    graph: DepGraph
    tags: tuple
    total_score: float


def span_delta(sc: ScoreSet, i: int, j: int, allow_punct_in_span: bool = False) -> float:
    """Score of the headless span [i, j]: B at i, then I plus arc i->k for k in (i, j]."""
    if not 1 <= i < j <= sc.n:
        raise ValueError(f"span_delta needs 1 <= i < j <= n, got ({i}, {j})")
    total = sc.tag[i, TAG_INDEX["B"]]
    for k in range(i + 1, j + 1):
        total += sc.tag[k, TAG_INDEX["I"]] + sc.attach[i, k]
        if sc.label is not None:
            total += _in_span_label(sc, i, k, last=(k == j), relaxed=allow_punct_in_span)[1]
    return float(total)


def _in_span_label(sc: ScoreSet, i: int, k: int, last: bool, relaxed: bool) -> tuple[str, float]:
    f = sc.flat_index
    best_r, best = f, sc.label[i, k, f]
    if relaxed and not last:
        for r, name in enumerate(sc.rel_vocab):
            if name == PUNCT and sc.label[i, k, r] > best:
                best_r, best = r, sc.label[i, k, r]
    return sc.rel_vocab[best_r], float(best)


def decode_tags(sc: ScoreSet) -> tuple:
    """Per-token argmax; ties prefer O, then B, then I."""
    out = []
    for j in range(1, sc.n + 1):
        row = sc.tag[j]
        out.append(max(("O", "B", "I"), key=lambda t: (row[TAG_INDEX[t]], -_TAG_CODE[t])))
    return tuple(out)


class _ArcTables:
    """Per-arc best label and score for arcs outside / inside spans."""

    def __init__(self, sc: ScoreSet, joint: bool, relaxed: bool):
        n = sc.n
        self.out_score = sc.attach.tolist()
        self.out_label = [[UNLABELED] * (n + 1) for _ in range(n + 1)]
        self.in_mid = self.in_last = None
        if sc.label is None:
            if joint:
                self.in_mid = self.in_last = (sc.attach.tolist(), None)
            return
        f = sc.flat_index
        lab = sc.label.copy()
        if joint:
            lab[:, :, f] = NEG_INF
        best = np.argmax(lab, axis=2)
        best_val = np.take_along_axis(lab, best[:, :, None], axis=2)[:, :, 0]
        self.out_score = (sc.attach + best_val).tolist()
        self.out_label = [[sc.rel_vocab[r] for r in row] for row in best.tolist()]
        if joint:
            last = sc.attach + sc.label[:, :, f]
            names = [[sc.rel_vocab[f]] * (n + 1) for _ in range(n + 1)]
            mid, mid_names = last.copy(), [row[:] for row in names]
            if relaxed and PUNCT in sc.rel_vocab:
                p = sc.rel_vocab.index(PUNCT)
                use_p = sc.label[:, :, p] > sc.label[:, :, f]
                mid = np.where(use_p, sc.attach + sc.label[:, :, p], last)
                for i, k in zip(*np.nonzero(use_p)):
                    mid_names[i][k] = PUNCT
            self.in_mid = (mid.tolist(), mid_names)
            self.in_last = (last.tolist(), names)


def _check_columns(sc: ScoreSet):
    for j in range(1, sc.n + 1):
        if not np.any(np.isfinite(sc.attach[:, j])):
            raise InfeasibleError(f"token {j} has no feasible head (attach column is all -inf)")


def _better(s, p, best, bp):
    if s == NEG_INF:
        return False
    if bp is None:
        return True
    tol = TIE_RTOL * (abs(best) + 1.0) if best != NEG_INF else 0.0
    return s > best + tol or (s >= best - tol and p < bp)


def _chart(sc: ScoreSet, joint: bool, single_root: bool, relaxed: bool):
    n = sc.n
    arcs = _ArcTables(sc, joint, relaxed)
    out = arcs.out_score
    base = max(n + 1, 3)
    w_head = [0] + [base ** (2 * n - k) for k in range(1, n + 1)]
    w_tag = [0] + [base ** (n - k) for k in range(1, n + 1)]

    neg = NEG_INF
    CR = [[neg] * (n + 1) for _ in range(n + 1)]
    CL = [[neg] * (n + 1) for _ in range(n + 1)]
    IR = [[neg] * (n + 1) for _ in range(n + 1)]
    IL = [[neg] * (n + 1) for _ in range(n + 1)]
    PCR = [[None] * (n + 1) for _ in range(n + 1)]
    PCL = [[None] * (n + 1) for _ in range(n + 1)]
    PIR = [[None] * (n + 1) for _ in range(n + 1)]
    PIL = [[None] * (n + 1) for _ in range(n + 1)]
    BCR = [[None] * (n + 1) for _ in range(n + 1)]
    BCL = [[None] * (n + 1) for _ in range(n + 1)]
    BI = [[None] * (n + 1) for _ in range(n + 1)]

    tag_o = sc.tag[:, TAG_INDEX["O"]].tolist() if joint else [0.0] * (n + 1)
    for i in range(n + 1):
        CR[i][i] = tag_o[i] if i else 0.0
        CL[i][i] = 0.0
        PCR[i][i] = PCL[i][i] = 0

    # delta[i][j] by running sums, with the matching tie-break penalty
    delta = pdelta = None
    if joint:
        mid, _ = arcs.in_mid
        last, _ = arcs.in_last
        tb = sc.tag[:, TAG_INDEX["B"]].tolist()
        ti = sc.tag[:, TAG_INDEX["I"]].tolist()
        delta = [[neg] * (n + 1) for _ in range(n + 1)]
        pdelta = [[0] * (n + 1) for _ in range(n + 1)]
        for i in range(1, n + 1):
            acc = tb[i]
            pacc = _TAG_CODE["B"] * w_tag[i]
            for j in range(i + 1, n + 1):
                delta[i][j] = acc + ti[j] + last[i][j]
                pdelta[i][j] = pacc + _TAG_CODE["I"] * w_tag[j] + i * w_head[j]
                acc += ti[j] + mid[i][j]
                pacc += _TAG_CODE["I"] * w_tag[j] + i * w_head[j]

    for w in range(1, n + 1):
        for i in range(0, n - w + 1):
            j = i + w
            # split shared by R-link and L-link: CR[i][k] + CL[k+1][j]
            best, bp, bk = neg, None, None
            cri, pcri = CR[i], PCR[i]
            for k in range(i, j):
                s = cri[k] + CL[k + 1][j]
                if s == neg:
                    continue
                p = pcri[k] + PCL[k + 1][j]
                if _better(s, p, best, bp):
                    best, bp, bk = s, p, k
            if bp is not None:
                BI[i][j] = bk
                a = out[i][j]
                if a != neg:
                    IR[i][j] = best + a
                    PIR[i][j] = bp + i * w_head[j]
                if i >= 1:
                    a = out[j][i]
                    if a != neg:
                        IL[i][j] = best + a
                        PIL[i][j] = bp + j * w_head[i]
            # L-comb: CL[i][k] + IL[k][j], head j
            if i >= 1:
                best, bp, bk = neg, None, None
                for k in range(i, j):
                    s = CL[i][k] + IL[k][j]
                    if s == neg:
                        continue
                    p = PCL[i][k] + PIL[k][j]
                    if _better(s, p, best, bp):
                        best, bp, bk = s, p, k
                CL[i][j], PCL[i][j], BCL[i][j] = best, bp, bk
            # R-comb: IR[i][k] + CR[k][j], head i; plus the R-mwe axiom
            best, bp, bk = neg, None, None
            for k in range(i + 1, j + 1):
                s = IR[i][k] + CR[k][j]
                if s == neg:
                    continue
                p = PIR[i][k] + PCR[k][j]
                if _better(s, p, best, bp):
                    best, bp, bk = s, p, k
            if joint and i >= 1 and _better(delta[i][j], pdelta[i][j], best, bp):
                best, bp, bk = delta[i][j], pdelta[i][j], _MWE
            CR[i][j], PCR[i][j], BCR[i][j] = best, bp, bk

    if single_root:
        best, bp, root = neg, None, None
        for r in range(1, n + 1):
            a = out[0][r]
            s = CL[1][r] + CR[r][n] + a
            if s == neg:
                continue
            p = PCL[1][r] + PCR[r][n]
            if _better(s, p, best, bp):
                best, bp, root = s, p, r
        goal = ("root", root)
    else:
        best, goal = CR[0][n], ("CR", 0, n)
    if best == neg:
        raise InfeasibleError("no structure with finite score exists")

    heads = [-1] * (n + 1)
    labels = [""] * (n + 1)
    tags = ["O"] * (n + 1)
    stack = []
    if goal[0] == "root":
        r = goal[1]
        heads[r], labels[r] = 0, arcs.out_label[0][r]
        stack += [("CL", 1, r), ("CR", r, n)]
    else:
        stack.append(goal)
    while stack:
        kind, i, j = stack.pop()
        if i == j and kind in ("CR", "CL"):
            continue
        if kind == "CR":
            k = BCR[i][j]
            if k == _MWE:
                tags[i] = "B"
                for m in range(i + 1, j + 1):
                    tags[m] = "I"
                    heads[m] = i
                    table = arcs.in_last if m == j else arcs.in_mid
                    labels[m] = table[1][i][m] if table[1] is not None else sc.flat
            else:
                stack += [("IR", i, k), ("CR", k, j)]
        elif kind == "CL":
            k = BCL[i][j]
            stack += [("CL", i, k), ("IL", k, j)]
        else:
            k = BI[i][j]
            if kind == "IR":
                heads[j], labels[j] = i, arcs.out_label[i][j]
            else:
                heads[i], labels[i] = j, arcs.out_label[j][i]
            stack += [("CR", i, k), ("CL", k + 1, j)]

    chart = {"CR": (CR, BCR), "CL": (CL, BCL), "IR": (IR, BI), "IL": (IL, BI)}
    return DepGraph(n, tuple(heads), tuple(labels)), tuple(tags[1:]), float(best), chart


_KIND_NAMES = {"CR": "right-triangle", "CL": "left-triangle",
               "IR": "right-trapezoid", "IL": "left-trapezoid"}


def chart_items(chart) -> list[ChartItem]:
    """Flatten a chart returned with ``return_chart=True`` into ChartItems with finite scores."""
    items = []
    for key, (scores, back) in chart.items():
        for i, row in enumerate(scores):
            for j, s in enumerate(row):
                if s != NEG_INF and j >= i:
                    rule = "mwe" if (key == "CR" and back[i][j] == _MWE) else ("init" if i == j else key)
                    items.append(ChartItem(_KIND_NAMES[key], i, j, s, (rule, back[i][j])))
    return items


def decode_eisner(sc: ScoreSet, single_root: bool = False) -> DepGraph:
    """Highest-scoring projective tree; each arc takes its argmax label."""
    _check_columns(sc)
    return _chart(sc, joint=False, single_root=single_root, relaxed=False)[0]


def decode_joint(sc: ScoreSet, single_root: bool = False, allow_punct_in_span: bool = False,
                 return_chart: bool = False):
    """Highest-scoring consistent (projective tree, BIO tags) pair.

    In the labeled case span-internal arcs take the flat label and every
    other arc takes its best non-flat label, so both views agree by
    construction.
    """
    _check_columns(sc)
    g, tags, score, chart = _chart(sc, joint=True, single_root=single_root,
                                   relaxed=allow_punct_in_span)
    res = JointResult(g, tags, score)
    return (res, chart) if return_chart else res


def tree_score(sc: ScoreSet, g: DepGraph) -> float:
    total = 0.0
    for h, m, r in g.arcs():
        total += sc.attach[h, m]
        if sc.label is not None:
            total += sc.label[h, m, sc.rel_index(r)]
    return float(total)


def structure_score(sc: ScoreSet, g: DepGraph, tags: Sequence[str]) -> float:
    """log P(y|x) of a consistent tree/tag pair."""
    if not consistent(g, tags, sc.flat):
        raise ValueError("tree and tags do not describe the same spans")
    total = tree_score(sc, g)
    for k, t in enumerate(tags, start=1):
        total += sc.tag[k, TAG_INDEX[t]]
    return float(total)


# ---------------------------------------------------------------------------
# brute-force oracles


@lru_cache(maxsize=None)
def projective_trees(n: int, single_root: bool = False) -> tuple[tuple[int, ...], ...]:
    """All projective trees over n words as 0-padded head tuples."""
    trees = []
    for heads in itertools.product(range(n + 1), repeat=n):
        if any(h == k for k, h in enumerate(heads, start=1)):
            continue
        g = DepGraph(n, (-1, *heads), ("",) * (n + 1))
        rep = validate_tree(g)
        if rep.is_tree and rep.is_projective and (not single_root or rep.root_children == 1):
            trees.append((-1, *heads))
    return tuple(trees)


@lru_cache(maxsize=None)
def wellformed_tag_sequences(n: int) -> tuple[tuple[str, ...], ...]:
    """Tag sequences whose every B opens a span of length >= 2 and every I continues one."""
    out = []
    for tags in itertools.product("BIO", repeat=n):
        ok = True
        for k, t in enumerate(tags):
            if t == "I" and (k == 0 or tags[k - 1] == "O"):
                ok = False
            if t == "B" and (k + 1 == n or tags[k + 1] != "I"):
                ok = False
        if ok:
            out.append(tags)
    return tuple(out)


def _pick(cands):
    """cands: (score, key, payload); max score, ties (1e-12 relative) to the smallest key."""
    finite = [c for c in cands if c[0] != NEG_INF]
    if not finite:
        raise InfeasibleError("no structure with finite score exists")
    top = max(c[0] for c in finite)
    tol = TIE_RTOL * (abs(top) + 1.0)
    return min((c for c in finite if c[0] >= top - tol), key=lambda c: c[1])


def _best_label(sc: ScoreSet, h: int, m: int, allowed) -> tuple[str, float]:
    best_name, best = None, NEG_INF
    for r, name in enumerate(sc.rel_vocab):
        if allowed(name) and (best_name is None or sc.label[h, m, r] > best):
            best_name, best = name, sc.label[h, m, r]
    return best_name, float(best)


def brute_force_parse(sc: ScoreSet, limit: int = 6, single_root: bool = False) -> DepGraph:
    if sc.n > limit:
        raise OracleLimitError(f"n = {sc.n} exceeds brute-force limit {limit}")
    n = sc.n
    cands = []
    for heads in projective_trees(n, single_root):
        score, labels = 0.0, [""]
        for m in range(1, n + 1):
            h = heads[m]
            score += sc.attach[h, m]
            if sc.label is not None:
                name, v = _best_label(sc, h, m, lambda r: True)
                score += v
            else:
                name = UNLABELED
            labels.append(name)
        cands.append((score, heads[1:], DepGraph(n, heads, tuple(labels))))
    return _pick(cands)[2]


def brute_force_joint(sc: ScoreSet, limit: int = 5, single_root: bool = False,
                      allow_punct_in_span: bool = False) -> JointResult:
    if sc.n > limit:
        raise OracleLimitError(f"n = {sc.n} exceeds brute-force limit {limit}")
    n = sc.n
    flat = sc.rel_vocab[sc.flat_index] if sc.label is not None else sc.flat
    not_flat = lambda r: r != flat
    cands = []
    for heads in projective_trees(n, single_root):
        has_kids = [False] * (n + 1)
        for m in range(1, n + 1):
            has_kids[heads[m]] = True
        for tags in wellformed_tag_sequences(n):
            spans = bio_to_spans(tags)
            in_span = {}
            ok = True
            for i, j in spans:
                for k in range(i + 1, j + 1):
                    if heads[k] != i or has_kids[k]:
                        ok = False
                    in_span[k] = (k == j)
            if not ok:
                continue
            score, labels = 0.0, [""]
            for m in range(1, n + 1):
                h = heads[m]
                score += sc.attach[h, m] + sc.tag[m, TAG_INDEX[tags[m - 1]]]
                if m in in_span:
                    name = flat
                    if sc.label is not None:
                        name, v = _best_label(sc, h, m, lambda r: r == flat)
                        if allow_punct_in_span and not in_span[m] and PUNCT in sc.rel_vocab:
                            pv = float(sc.label[h, m, sc.rel_vocab.index(PUNCT)])
                            if pv > v:  # flat wins ties
                                name, v = PUNCT, pv
                        score += v
                elif sc.label is not None:
                    name, v = _best_label(sc, h, m, not_flat)
                    score += v
                else:
                    name = UNLABELED
                labels.append(name)
            key = heads[1:] + tuple(_TAG_CODE[t] for t in tags)
            cands.append((score, key, (heads, tuple(labels), tags)))
    score, _, (heads, labels, tags) = _pick(cands)
    return JointResult(DepGraph(n, heads, labels), tags, float(score))
