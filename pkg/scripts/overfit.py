"""Overfit the toy model on a small corpus and report span F1 / UAS / LAS per lambda.

Usage: python scripts/overfit.py [--corpus tests/data/train50.conllu] [--epochs 60]
"""

import argparse
import logging
import pathlib
import time

from flatmwe.evaluation import attachment_scores, span_prf
from flatmwe.headless import extract_spans
from flatmwe.pipeline import predict
from flatmwe.scoring.model import ModelConfig, scores_for
from flatmwe.scoring.training import TrainConfig, train
from flatmwe.treebank import read_conllu

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default=str(ROOT / "tests" / "data" / "train50.conllu"))
    ap.add_argument("--flat", default="flat")
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--lr", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 0.3, 1.0])
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    corpus = read_conllu(args.corpus)
    gold_spans = [extract_spans(s, args.flat, on_malformed="skip") for s in corpus]
    mcfg = ModelConfig(embed_dim=32, window=1, attach_dim=64, rel_dim=32, tag_hidden=64)
    print(f"{'lambda':>6}  {'mode':<5}  {'F1':>6}  {'UAS':>6}  {'LAS':>6}  {'secs':>5}")
    for lam in args.lambdas:
        mode = "tag" if lam == 0 else "parse" if lam == 1 else "joint"
        t0 = time.perf_counter()
        cfg = TrainConfig(lam=lam, learning_rate=args.lr, max_epochs=args.epochs, seed=args.seed)
        p = train(corpus, cfg, mcfg, flat=args.flat, dev=corpus)
        preds = [predict(scores_for(s, p), mode, allow_punct_in_span=True) for s in corpus]
        f1 = span_prf(gold_spans, [x.spans for x in preds]).f1
        att = attachment_scores([s.graph() for s in corpus], [x.graph for x in preds])
        print(f"{lam:>6}  {mode:<5}  {100 * f1:6.2f}  {att.uas:6.2f}  {att.las:6.2f}  "
              f"{time.perf_counter() - t0:5.1f}")


if __name__ == "__main__":
    main()
