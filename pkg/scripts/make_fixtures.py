"""Generate the synthetic CoNLL-U fixtures under tests/data/.

train50.conllu  50 projective, fully compliant sentences (flat label "flat")
stats50.conllu  the same sentences with a handful of deliberate annotation
                faults, used for the corpus statistics checks

Usage: python scripts/make_fixtures.py [--seed 3] [--out tests/data]
"""

import argparse
import pathlib
import random

FIRST = ["Martin", "Ada", "Grace", "Alan", "Rosa", "Nelson", "Marie", "Kurt", "Emmy", "Niels",
         "Hedy", "Linus", "Tove", "Sofia", "Ivan", "Lise", "Omar", "Yuki", "Chidi", "Ines"]
MIDDLE = ["Luther", "Maria", "Jean", "Paul", "Anne", "Lee", "Ray", "Jo"]
LAST = ["King", "Lovelace", "Hopper", "Turing", "Parks", "Mandela", "Curie", "Godel", "Noether",
        "Bohr", "Lamarr", "Pauling", "Jansson", "Kovalevskaya", "Pavlov", "Meitner", "Khayyam",
        "Tanaka", "Okafor", "Arriaga"]
PLACE_A = ["New", "San", "Port", "Lake", "Mount", "Cape", "Fort", "Glen"]
PLACE_B = ["York", "Diego", "Louis", "Placid", "Vernon", "Town", "Worth", "Coe", "Moresby", "Hope"]
MONTHS = ["January", "March", "April", "July", "October", "December"]
VERBS = ["visited", "praised", "met", "founded", "described", "painted", "studied", "left",
         "admired", "joined", "built", "saw"]
INTRANS = ["arrived", "spoke", "lived", "worked", "slept", "waited"]
DETS = ["the", "a", "every", "this"]
NOUNS = ["museum", "bridge", "library", "garden", "school", "monument", "harbor", "theater",
         "station", "market", "tower", "factory"]
ADJS = ["old", "quiet", "famous", "small", "bright", "empty"]
ADVS = ["yesterday", "today", "again", "quickly", "early"]
PREPS = ["in", "near", "from", "to"]
PRONS = ["She", "He", "They", "We"]


class S:
    def __init__(self):
        self.rows = []  # [form, upos, head, deprel]

    def add(self, form, upos, head=None, rel=None):
        self.rows.append([form, upos, head, rel])
        return len(self.rows)

    def set(self, k, head, rel):
        self.rows[k - 1][2], self.rows[k - 1][3] = head, rel


def name(rng, s):
    parts = [rng.choice(FIRST)]
    if rng.random() < 0.35:
        parts.append(rng.choice(MIDDLE))
    parts.append(rng.choice(LAST))
    ks = [s.add(p, "PROPN") for p in parts]
    for k in ks[1:]:
        s.set(k, ks[0], "flat")
    return ks[0]


def place(rng, s):
    ks = [s.add(rng.choice(PLACE_A), "PROPN"), s.add(rng.choice(PLACE_B), "PROPN")]
    s.set(ks[1], ks[0], "flat")
    return ks[0]


def date(rng, s):
    m = s.add(rng.choice(MONTHS), "PROPN")
    s.add(str(rng.randint(1, 28)), "NUM", m, "flat")
    s.add(",", "PUNCT", m, "punct")
    s.add(str(rng.randint(1900, 2020)), "NUM", m, "flat")
    return m


def t_name_verb_obj(rng, s):
    subj = name(rng, s)
    v = s.add(rng.choice(VERBS), "VERB", 0, "root")
    d = s.add(rng.choice(DETS), "DET")
    n = s.add(rng.choice(NOUNS), "NOUN", v, "obj")
    s.set(d, n, "det")
    s.set(subj, v, "nsubj")
    s.add(".", "PUNCT", v, "punct")


def t_noun_verb_place(rng, s):
    d = s.add(rng.choice(DETS), "DET")
    n = s.add(rng.choice(NOUNS), "NOUN")
    v = s.add(rng.choice(INTRANS), "VERB", 0, "root")
    s.set(d, n, "det")
    s.set(n, v, "nsubj")
    p = s.add(rng.choice(PREPS), "ADP")
    pl = place(rng, s)
    s.set(p, pl, "case")
    s.set(pl, v, "obl")
    s.add(".", "PUNCT", v, "punct")


def t_name_date(rng, s):
    subj = name(rng, s)
    v = s.add(rng.choice(INTRANS), "VERB", 0, "root")
    s.set(subj, v, "nsubj")
    p = s.add("on", "ADP")
    m = date(rng, s)
    s.set(p, m, "case")
    s.set(m, v, "obl")
    s.add(".", "PUNCT", v, "punct")


def t_two_spans(rng, s):
    pr = s.add(rng.choice(PRONS), "PRON")
    v = s.add(rng.choice(VERBS), "VERB", 0, "root")
    s.set(pr, v, "nsubj")
    obj = name(rng, s)
    s.set(obj, v, "obj")
    p = s.add(rng.choice(PREPS), "ADP")
    pl = place(rng, s)
    s.set(p, pl, "case")
    s.set(pl, v, "obl")
    s.add(".", "PUNCT", v, "punct")


def t_plain(rng, s):
    d = s.add(rng.choice(DETS), "DET")
    a = s.add(rng.choice(ADJS), "ADJ")
    n = s.add(rng.choice(NOUNS), "NOUN")
    v = s.add(rng.choice(INTRANS), "VERB", 0, "root")
    s.set(d, n, "det")
    s.set(a, n, "amod")
    s.set(n, v, "nsubj")
    s.add(rng.choice(ADVS), "ADV", v, "advmod")
    s.add(".", "PUNCT", v, "punct")


TEMPLATES = [t_name_verb_obj, t_noun_verb_place, t_name_date, t_two_spans, t_plain]


def generate(seed):
    rng = random.Random(seed)
    out = []
    for i in range(50):
        s = S()
        TEMPLATES[i % len(TEMPLATES)](rng, s)
        out.append(s)
    return out


def corrupt(sents):
    """Inject annotation faults; returns a description per touched sentence."""
    notes = {}
    # 2: date sentence, comma re-attached to the flat day token (leaf + common-head faults)
    s = sents[2]
    day = next(k for k, r in enumerate(s.rows, 1) if r[3] == "flat" and r[1] == "NUM")
    comma = day + 1
    s.set(comma, day, "punct")
    notes[2] = "comma under flat token"
    # 10: first name span: second token relabelled nmod while a later flat keeps the span
    s = sents[10]
    first = next(k for k, r in enumerate(s.rows, 1) if r[3] == "nsubj")
    s.rows.insert(first, ["von", "ADP", first, "nmod"])
    for r in s.rows:
        if isinstance(r[2], int) and r[2] > first:
            r[2] += 1
    notes[10] = "nmod inside flat span"
    # 21: leftward flat arc (det -> noun relabelled flat)
    s = sents[21]
    det = next(k for k, r in enumerate(s.rows, 1) if r[3] == "det")
    s.set(det, s.rows[det - 1][2], "flat")
    notes[21] = "leftward flat arc"
    # 33: flat token with its own dependent
    s = sents[33]
    pl = next(k for k, r in enumerate(s.rows, 1) if r[3] == "obl")
    s.rows.insert(pl + 1, ["Bay", "PROPN", pl + 1, "compound"])
    for r in s.rows:
        if isinstance(r[2], int) and r[2] > pl + 1 and r is not s.rows[pl + 1]:
            r[2] += 1
    notes[33] = "flat token heads a compound"
    return notes


def render(sents, prefix, mwt_at=None):
    lines = []
    for i, s in enumerate(sents):
        lines.append(f"# sent_id = {prefix}-{i + 1:02d}")
        lines.append("# text = " + " ".join(r[0] for r in s.rows))
        for k, (form, upos, head, rel) in enumerate(s.rows, 1):
            if mwt_at == (i, k):
                lines.append(f"{k}-{k + 1}\t{form}{s.rows[k][0]}\t_\t_\t_\t_\t_\t_\t_\t_")
            lines.append(f"{k}\t{form}\t_\t{upos}\t_\t_\t{head}\t{rel}\t_\t_")
        lines.append("")
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "tests" / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "train50.conllu").write_text(render(generate(args.seed), "train"), encoding="utf-8")
    sents = generate(args.seed)
    notes = corrupt(sents)
    (out / "stats50.conllu").write_text(render(sents, "stats", mwt_at=(4, 3)), encoding="utf-8")
    for i, what in sorted(notes.items()):
        print(f"stats-{i + 1:02d}: {what}")


if __name__ == "__main__":
    main()
