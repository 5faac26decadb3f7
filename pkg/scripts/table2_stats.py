"""Corpus statistics table (tokens, headless arcs, spans, span length, compliance).

Each argument is NAME=PATH[,PATH...] where a PATH is a CoNLL-U file or a
directory of them.  The English MWE-aware corpus uses the mwe_NNP label:

    python scripts/table2_stats.py English=ewt-mwe/ --flat-for English=mwe_NNP \
        nl_lassysmall=nl_lassysmall-ud-train.conllu,nl_lassysmall-ud-dev.conllu
"""

import argparse
import pathlib

from flatmwe.headless import corpus_stats
from flatmwe.treebank import read_conllu


def load(spec):
    out = []
    for part in spec.split(","):
        p = pathlib.Path(part)
        for f in (sorted(p.glob("*.conllu")) if p.is_dir() else [p]):
            out.extend(read_conllu(f))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpora", nargs="+", metavar="NAME=PATHS")
    ap.add_argument("--flat", default="flat")
    ap.add_argument("--flat-for", action="append", default=[], metavar="NAME=LABEL")
    args = ap.parse_args()
    labels = dict(x.split("=", 1) for x in args.flat_for)
    rows = []
    for item in args.corpora:
        name, _, paths = item.partition("=")
        rows.append(corpus_stats(load(paths), labels.get(name, args.flat)).to_table(name).splitlines())
    print(rows[0][0])
    for r in rows:
        print(r[1])


if __name__ == "__main__":
    main()
