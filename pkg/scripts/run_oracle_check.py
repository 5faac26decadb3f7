"""Decoder-vs-enumeration equivalence sweep over sentence lengths and decoder options.

Usage: python scripts/run_oracle_check.py [--trials 500] [--seed 0] [--max-n 5]
"""

import argparse
import contextlib
import io
import itertools
import time

from flatmwe.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-n", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    worst = 0
    for labeled, single_root, relaxed in itertools.product((False, True), repeat=3):
        flags = [f for f, on in (("--labeled", labeled), ("--single-root", single_root),
                                 ("--allow-punct-in-span", relaxed)) if on]
        t0 = time.perf_counter()
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            rc = run(["oracle-check", "--n", *map(str, range(1, args.max_n + 1)), "--trials", str(args.trials),
                      "--seed", str(args.seed), "--limit", str(args.max_n), "--jobs", str(args.jobs), *flags])
        print(f"{' '.join(flags) or '(defaults)':<46} {buf.getvalue().strip():>16}  "
              f"[{time.perf_counter() - t0:.1f}s]")
        worst = max(worst, rc)
    raise SystemExit(worst)


if __name__ == "__main__":
    main()
