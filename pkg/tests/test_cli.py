import json
import subprocess
import sys

import numpy as np
import pytest

from flatmwe.cli import run
from flatmwe.headless import extract_spans, spans_to_bio
from flatmwe.scoring.model import ModelConfig, build_rel_vocab, build_vocab, init_params, save_params
from flatmwe.scoring.scoreset import random_scoreset, write_scores_jsonl
from flatmwe.scoring.training import rng_stream
from flatmwe.treebank import read_conllu, write_conllu

from _gen import onehot_scoreset
from conftest import DATA

TRAIN = str(DATA / "train50.conllu")
STATS = str(DATA / "stats50.conllu")
REL_VOCAB = ("amod", "case", "det", "flat", "nsubj", "obj", "obl", "punct", "root", "advmod")


def cli(capsys, *argv):
    rc = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


@pytest.fixture(scope="module")
def gold_scores(tmp_path_factory):
    corpus = read_conllu(TRAIN)
    scs = []
    for s in corpus:
        tags = spans_to_bio(len(s), extract_spans(s))
        sc = onehot_scoreset(s.graph(), tags, rel_vocab=REL_VOCAB)
        scs.append(type(sc)(sc.n, sc.attach, sc.tag, sc.label, sc.rel_vocab, sc.flat, s.sent_id))
    path = tmp_path_factory.mktemp("scores") / "gold.jsonl"
    path.write_text(write_scores_jsonl(scs))
    return path


def test_stats_kv(capsys):
    rc, out, _ = cli(capsys, "stats", "--format", "kv", "--jobs", 1, STATS)
    kv = dict(line.split("=") for line in out.splitlines())
    assert rc == 0
    assert kv["token_count"] == "372" and kv["headless_span_count"] == "60"
    assert kv["compliance_ratio"] == "90.0"


def test_stats_parallel_matches_serial(capsys):
    serial = cli(capsys, "stats", "--jobs", 1, STATS, TRAIN)[1]
    parallel = cli(capsys, "stats", "--jobs", 2, STATS, TRAIN)[1]
    assert serial == parallel and "95.00%" in serial


def test_to_bio_then_spans_matches_extract(capsys, tmp_path):
    _, tsv, _ = cli(capsys, "extract-spans", TRAIN)
    bio = tmp_path / "t.bio"
    assert cli(capsys, "to-bio", TRAIN, "-o", bio)[0] == 0
    tv = tmp_path / "tv.conllu"
    assert cli(capsys, "to-tree-view", bio, "-o", tv)[0] == 0
    _, tsv2, _ = cli(capsys, "extract-spans", tv)
    assert tsv == tsv2 and tsv.count("\n") == 60


def test_tree_view_with_base_restores_gold(capsys, tmp_path):
    bio = tmp_path / "t.bio"
    cli(capsys, "to-bio", TRAIN, "-o", bio)
    tv = tmp_path / "tv.conllu"
    cli(capsys, "to-tree-view", bio, "--base", TRAIN, "-o", tv)
    assert [s.graph() for s in read_conllu(tv)] == [s.graph() for s in read_conllu(TRAIN)]


def test_decode_gold_scores_then_eval(capsys, tmp_path, gold_scores):
    pred = tmp_path / "pred.conllu"
    spans = tmp_path / "pred.tsv"
    rc, _, err = cli(capsys, "decode", "--scores", gold_scores, "--input", TRAIN, "--mode", "joint",
                     "--allow-punct-in-span", "--jobs", 1, "-o", pred, "--spans-tsv", spans)
    assert rc == 0, err
    assert "# mwe_spans = " in pred.read_text()
    _, out, _ = cli(capsys, "eval", "--gold", TRAIN, "--pred", pred)
    kv = dict(line.split("=") for line in out.splitlines())
    assert kv["span_f1"] == "100.00" and kv["uas"] == "100.00" and kv["las"] == "100.00"
    assert spans.read_text() == cli(capsys, "extract-spans", TRAIN)[1]


@pytest.mark.parametrize("mode", ["parse", "tag"])
def test_decode_other_modes(capsys, tmp_path, gold_scores, mode):
    pred = tmp_path / f"{mode}.conllu"
    assert cli(capsys, "decode", "--scores", gold_scores, "--input", TRAIN, "--mode", mode,
               "--jobs", 1, "-o", pred)[0] == 0
    kv = dict(line.split("=") for line in cli(capsys, "eval", "--gold", TRAIN, "--pred", pred)[1].splitlines())
    assert kv["span_f1"] == "100.00"


def test_decode_is_deterministic_across_jobs(capsys, tmp_path, gold_scores):
    a, b = tmp_path / "a.conllu", tmp_path / "b.conllu"
    cli(capsys, "decode", "--scores", gold_scores, "--input", TRAIN, "--jobs", 1, "-o", a)
    cli(capsys, "decode", "--scores", gold_scores, "--input", TRAIN, "--jobs", 2, "-o", b)
    assert a.read_bytes() == b.read_bytes()


def test_train_score_decode_pipeline(capsys, tmp_path):
    model = tmp_path / "m.bin"
    first = read_conllu(TRAIN)[:6]
    small = tmp_path / "small.conllu"
    small.write_text(write_conllu(first))
    rc, _, err = cli(capsys, "train", "--input", small, "--epochs", 2, "--embed-dim", 4, "--attach-dim", 5,
                     "--rel-dim", 3, "--tag-hidden", 5, "--seed", 3, "-o", model)
    assert rc == 0, err
    assert model.read_bytes()[:8] == b"FLATDEC1"
    scores = tmp_path / "s.jsonl"
    assert cli(capsys, "score", "--model", model, "--input", small, "--jobs", 1, "-o", scores)[0] == 0
    lines = scores.read_text().splitlines()
    assert len(lines) == 6 and json.loads(lines[0])["n"] == len(first[0])
    pred = tmp_path / "p.conllu"
    assert cli(capsys, "decode", "--model", model, "--input", small, "--jobs", 1, "-o", pred)[0] == 0
    assert len(read_conllu(pred)) == 6
    model2 = tmp_path / "m2.bin"
    cli(capsys, "train", "--input", small, "--epochs", 2, "--embed-dim", 4, "--attach-dim", 5,
        "--rel-dim", 3, "--tag-hidden", 5, "--seed", 3, "-o", model2)
    assert model.read_bytes() == model2.read_bytes()


def test_score_with_external_vectors(capsys, tmp_path):
    corpus = read_conllu(TRAIN)[:3]
    params = init_params(build_vocab(corpus), build_rel_vocab(corpus, "flat"), "flat",
                         ModelConfig(4, 1, 5, 3, 5, external_dim=6), rng_stream(0, "init"))
    model = tmp_path / "ext.bin"
    save_params(params, model)
    rng = np.random.default_rng(0)
    vec = tmp_path / "v.jsonl"
    vec.write_text("".join(json.dumps({"vectors": rng.normal(size=(len(s) + 1, 6)).tolist()}) + "\n"
                           for s in corpus))
    small = tmp_path / "c.conllu"
    small.write_text(write_conllu(corpus))
    rc, _, err = cli(capsys, "score", "--model", model, "--input", small, "--vectors", vec, "--jobs", 1)
    assert rc == 0, err


def test_oracle_check(capsys):
    rc, out, _ = cli(capsys, "oracle-check", "--n", 4, "--trials", 20, "--seed", 7, "--labeled", "--jobs", 1)
    assert rc == 0 and out == "20/20 exact\n"


def test_oracle_check_supplied_scores(capsys, tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "r.jsonl"
    path.write_text(write_scores_jsonl([random_scoreset(rng, 4, labeled=True) for _ in range(5)]))
    assert cli(capsys, "oracle-check", "--scores", path, "--jobs", 1)[1] == "5/5 exact\n"
    assert cli(capsys, "oracle-check", "--scores", path, "--limit", 3, "--jobs", 1)[0] == 2


def test_exit_codes(capsys, tmp_path):
    rc, _, err = cli(capsys, "stats", "--no-such-flag", TRAIN)
    assert rc == 1 and "usage" in err
    assert cli(capsys)[0] == 1
    assert cli(capsys, "stats", tmp_path / "missing.conllu")[0] == 2
    bad = tmp_path / "bad.conllu"
    bad.write_text("1\tx\n")
    rc, _, err = cli(capsys, "stats", bad)
    assert rc == 2 and "line 1" in err
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"garbage!")
    assert cli(capsys, "score", "--model", junk, "--input", TRAIN)[0] == 2
    assert cli(capsys, "decode", "--input", TRAIN)[0] == 1


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "flatmwe", "oracle-check", "--n", "3", "--trials", "5",
                          "--jobs", "1"], capture_output=True, text=True, check=True).stdout
    assert out == "5/5 exact\n"
