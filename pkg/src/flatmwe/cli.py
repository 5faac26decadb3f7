"""Command-line entry point: ``flatmwe <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal or numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from .decode import (InfeasibleError, brute_force_joint, brute_force_parse, decode_eisner,
                     decode_joint, tree_score)
from .evaluation import attachment_scores, report_kv, report_table, span_prf
from .headless import (PUNCT, MalformedFlatError, StatsReport, bio_to_spans, extract_spans,
                       format_span_comment, parse_span_comment, sentence_stats, spans_to_bio,
                       spans_tsv)
from .pipeline import MODES, predict
from .scoring.model import (ConfigError, ModelConfig, NumericalError, load_params, save_params,
                            scores_for)
from .scoring.scoreset import VocabularyError, random_scoreset, read_scores_jsonl, write_scores_jsonl
from .scoring.training import TrainConfig, TrainingError, rng_stream, train
from .treebank import ConlluError, Sentence, Token, read_conllu, same_label, write_conllu

log = logging.getLogger("flatmwe")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _map(fn, items, jobs):
    """Order-preserving map, fanned out over processes when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as f:
        return f.read()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_stats(args):
    reports = []
    for path in args.inputs:
        corpus = read_conllu(path)
        parts = _map(partial(sentence_stats, flat_label=args.flat), corpus, args.jobs)
        reports.append(sum(parts, StatsReport()))
    total = sum(reports, StatsReport())
    name = args.name or ",".join(os.path.basename(p) for p in args.inputs)
    _write(args.output, total.to_table(name) if args.format == "table" else total.to_kv())


def cmd_extract_spans(args):
    corpus = read_conllu(args.input)
    spans = [extract_spans(s, args.flat, on_malformed=args.on_malformed) for s in corpus]
    _write(args.output, spans_tsv(corpus, spans))


def _bio_text(corpus, flat):
    out = []
    for s in corpus:
        tags = spans_to_bio(len(s), extract_spans(s, flat, on_malformed="skip"))
        out.append(f"# sent_id = {s.sent_id}\n")
        out += [f"{t.index}\t{t.form}\t{tag}\n" for t, tag in zip(s.tokens, tags)]
        out.append("\n")
    return "".join(out)


def read_bio(text):
    """Parse the to-bio format: ``# sent_id`` line, then index/form/tag rows."""
    sents, cur, sid = [], [], ""
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            if cur:
                sents.append((sid, cur))
            cur, sid = [], ""
            continue
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            if key.strip() == "sent_id":
                sid = val.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 3 or cols[2] not in ("B", "I", "O"):
            raise ConlluError("expected index<TAB>form<TAB>B|I|O", lineno)
        cur.append((cols[1], cols[2]))
    if cur:
        sents.append((sid, cur))
    return sents


def cmd_to_bio(args):
    _write(args.output, _bio_text(read_conllu(args.input), args.flat))


def cmd_to_tree_view(args):
    """Spans from BIO tags become flat arcs.  Other tokens keep their
    arcs from --base when given (flat arcs there are relabelled dep),
    otherwise they attach to the root as ``dep``.  A base punct arc from
    a non-final span token to the span start is kept."""
    bio = read_bio(_read_text(args.input))
    base = read_conllu(args.base) if args.base else None
    out = []
    for idx, (sid, rows) in enumerate(bio):
        tags = [t for _, t in rows]
        spans = bio_to_spans(tags)
        n = len(rows)
        if base is not None:
            g = base[idx].graph()
            if g.n != n:
                raise ValueError(f"sentence {sid or idx + 1}: base has {g.n} tokens, tags have {n}")
            heads = list(g.heads)
            labels = ["dep" if (k and same_label(g.labels[k], args.flat)) else g.labels[k] for k in range(n + 1)]
        else:
            heads, labels = [-1] + [0] * n, [""] + ["dep"] * n
        for i, j in spans:
            for k in range(i + 1, j + 1):
                keep_punct = k < j and heads[k] == i and same_label(labels[k], PUNCT)
                heads[k], labels[k] = i, labels[k] if keep_punct else args.flat
        toks = tuple(Token(k, form, head=heads[k], deprel=labels[k]) for k, (form, _) in enumerate(rows, 1))
        comments = (f"# sent_id = {sid}",) if sid else ()
        out.append(Sentence(toks, sid, comments + (format_span_comment(spans),)))
    _write(args.output, write_conllu(out))


def _read_vectors(path):
    with open(path, encoding="utf-8") as f:
        return [np.asarray(json.loads(line)["vectors"], dtype=float) for line in f if line.strip()]


def _score_one(item, params, labeled):
    s, vec = item
    return scores_for(s, params, vec, labeled=labeled)


def cmd_score(args):
    params = load_params(args.model)
    corpus = read_conllu(args.input)
    vectors = _read_vectors(args.vectors) if args.vectors else [None] * len(corpus)
    if len(vectors) != len(corpus):
        raise ValueError(f"{len(vectors)} vector records for {len(corpus)} sentences")
    scs = _map(partial(_score_one, params=params, labeled=not args.unlabeled),
               list(zip(corpus, vectors)), args.jobs)
    _write(args.output, write_scores_jsonl(scs))


def _decode_one(sc, mode, single_root, relaxed):
    return predict(sc, mode, single_root=single_root, allow_punct_in_span=relaxed)


def cmd_decode(args):
    corpus = read_conllu(args.input) if args.input else None
    if args.scores:
        scs = read_scores_jsonl(_read_text(args.scores))
    elif args.model:
        if corpus is None:
            raise UsageError("decode --model needs --input")
        params = load_params(args.model)
        scs = _map(partial(_score_one, params=params, labeled=not args.unlabeled),
                   [(s, None) for s in corpus], args.jobs)
    else:
        raise UsageError("decode needs --scores or --model")
    if corpus is None:
        corpus = [Sentence(tuple(Token(k, "_") for k in range(1, sc.n + 1)), sc.sent_id,
                           (f"# sent_id = {sc.sent_id}",) if sc.sent_id else ()) for sc in scs]
    if len(corpus) != len(scs):
        raise ValueError(f"{len(scs)} score records for {len(corpus)} sentences")
    preds = _map(partial(_decode_one, mode=args.mode, single_root=args.single_root,
                         relaxed=args.allow_punct_in_span), scs, args.jobs)
    out = []
    for s, sc, pr in zip(corpus, scs, preds):
        if len(s) != sc.n:
            raise ValueError(f"sentence {s.sent_id or '?'}: {len(s)} tokens but scores for {sc.n}")
        comments = [c for c in s.raw_comments if parse_span_comment([c]) is None]
        comments.append(format_span_comment(pr.spans))
        out.append(s.with_graph(pr.graph, comments))
    _write(args.output, write_conllu(out))
    if args.spans_tsv:
        _write(args.spans_tsv, spans_tsv(out, [p.spans for p in preds]))


def cmd_train(args):
    corpus = read_conllu(args.input)
    dev = read_conllu(args.dev) if args.dev else None
    cfg = TrainConfig(lam=args.lam, learning_rate=args.lr, batch_size=args.batch_size,
                      max_epochs=args.epochs, patience=args.patience, seed=args.seed,
                      dropout_rate=args.dropout, label_loss=not args.no_label_loss)
    mcfg = ModelConfig(embed_dim=args.embed_dim, window=args.window, attach_dim=args.attach_dim,
                       rel_dim=args.rel_dim, tag_hidden=args.tag_hidden)
    params = train(corpus, cfg, mcfg, flat=args.flat, dev=dev)
    save_params(params, args.output)


def cmd_eval(args):
    gold = read_conllu(args.gold)
    pred = read_conllu(args.pred)
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} sentences, prediction has {len(pred)}")
    gspans = [extract_spans(s, args.flat, on_malformed="skip") for s in gold]
    pspans = []
    for s in pred:
        c = parse_span_comment(s.raw_comments)
        pspans.append(c if c is not None else extract_spans(s, args.flat, on_malformed="skip"))
    prf = span_prf(gspans, pspans)
    att = attachment_scores([s.graph() for s in gold], [s.graph() for s in pred])
    _write(args.output, report_table(prf, att) if args.format == "table" else report_kv(prf, att))


def _oracle_one(sc, limit, single_root, relaxed):
    """True when both DP decoders agree with their brute-force oracles."""
    g = decode_eisner(sc, single_root=single_root)
    b = brute_force_parse(sc, limit=max(limit, sc.n), single_root=single_root)
    ok = g == b and abs(tree_score(sc, g) - tree_score(sc, b)) <= 1e-9
    j = decode_joint(sc, single_root=single_root, allow_punct_in_span=relaxed)
    bj = brute_force_joint(sc, limit=max(limit, sc.n), single_root=single_root, allow_punct_in_span=relaxed)
    return ok and j.graph == bj.graph and j.tags == bj.tags and abs(j.total_score - bj.total_score) <= 1e-9


def cmd_oracle_check(args):
    if args.scores:
        scs = read_scores_jsonl(_read_text(args.scores))
        too_big = [sc.n for sc in scs if sc.n > args.limit]
        if too_big:
            raise ValueError(f"sentence length {max(too_big)} exceeds --limit {args.limit}")
    else:
        scs = []
        for n in args.n:
            if n > args.limit:
                raise UsageError(f"--n {n} exceeds --limit {args.limit}")
            rng = rng_stream(args.seed, f"oracle-check/n={n}/labeled={args.labeled}")
            scs += [random_scoreset(rng, n, labeled=args.labeled) for _ in range(args.trials)]
    results = _map(partial(_oracle_one, limit=args.limit, single_root=args.single_root,
                           relaxed=args.allow_punct_in_span), scs, args.jobs)
    ok = sum(results)
    _write(args.output, f"{ok}/{len(results)} exact\n")
    return EXIT_OK if ok == len(results) else EXIT_INTERNAL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="flatmwe", description="Headless multi-word expressions in dependency treebanks.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, flat=True):
        if flat:
            p.add_argument("--flat", default="flat", help="flat relation label (mwe_NNP for the English corpus)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.add_argument("--output", "-o", default=None, help="output file (default stdout)")
        return p

    p = common(sub.add_parser("stats", help="corpus statistics (token/flat/span counts, compliance)"))
    p.add_argument("inputs", nargs="+")
    p.add_argument("--name", default=None)
    p.add_argument("--format", choices=("table", "kv"), default="table")
    p.set_defaults(fn=cmd_stats)

    p = common(sub.add_parser("extract-spans", help="CoNLL-U trees -> spans TSV"))
    p.add_argument("input")
    p.add_argument("--on-malformed", choices=("raise", "skip"), default="skip")
    p.set_defaults(fn=cmd_extract_spans)

    p = common(sub.add_parser("to-bio", help="CoNLL-U trees -> BIO tags"))
    p.add_argument("input")
    p.set_defaults(fn=cmd_to_bio)

    p = common(sub.add_parser("to-tree-view", help="BIO tags -> CoNLL-U with flat arcs"))
    p.add_argument("input")
    p.add_argument("--base", default=None, help="CoNLL-U supplying arcs outside spans")
    p.set_defaults(fn=cmd_to_tree_view)

    p = common(sub.add_parser("score", help="model + CoNLL-U -> scores-jsonl"), flat=False)
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--vectors", default=None, help="JSONL of per-sentence input vectors")
    p.add_argument("--unlabeled", action="store_true")
    p.set_defaults(fn=cmd_score)

    p = common(sub.add_parser("decode", help="scores or model -> annotated CoNLL-U"), flat=False)
    p.add_argument("--scores", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--input", default=None, help="CoNLL-U providing the tokens")
    p.add_argument("--mode", choices=MODES, default="joint")
    p.add_argument("--unlabeled", action="store_true")
    p.add_argument("--single-root", action="store_true")
    p.add_argument("--allow-punct-in-span", action="store_true")
    p.add_argument("--spans-tsv", default=None)
    p.set_defaults(fn=cmd_decode)

    p = common(sub.add_parser("train", help="train a model artifact"))
    p.add_argument("--input", required=True)
    p.add_argument("--dev", default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--no-label-loss", action="store_true")
    p.add_argument("--embed-dim", type=int, default=100)
    p.add_argument("--window", type=int, default=1)
    p.add_argument("--attach-dim", type=int, default=500)
    p.add_argument("--rel-dim", type=int, default=100)
    p.add_argument("--tag-hidden", type=int, default=500)
    p.set_defaults(fn=cmd_train)

    p = common(sub.add_parser("eval", help="span P/R/F1 and UAS/LAS against gold"))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=("table", "kv"), default="kv")
    p.set_defaults(fn=cmd_eval)

    p = common(sub.add_parser("oracle-check", help="DP decoders vs brute-force enumeration"), flat=False)
    p.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5])
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--limit", type=int, default=5)
    p.add_argument("--single-root", action="store_true")
    p.add_argument("--allow-punct-in-span", action="store_true")
    p.add_argument("--scores", default=None, help="check supplied scores-jsonl instead of random ones")
    p.set_defaults(fn=cmd_oracle_check)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    if args.jobs < 1:
        print("flatmwe: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        rc = args.fn(args)
    except UsageError as e:
        print(f"flatmwe: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, TrainingError) as e:
        print(f"flatmwe: numerical error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (OSError, ConlluError, MalformedFlatError, VocabularyError, InfeasibleError,
            ConfigError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"flatmwe: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        print(f"flatmwe: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return rc or EXIT_OK


def main():
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
