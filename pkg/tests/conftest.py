import os
import pathlib
import sys

import pytest
from hypothesis import HealthCheck, settings

from flatmwe.treebank import read_conllu

DATA = pathlib.Path(__file__).parent / "data"

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=300, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def fig1():
    return read_conllu(DATA / "fig1.conllu")[0]


@pytest.fixture(scope="session")
def fig2():
    en, de = read_conllu(DATA / "fig2.conllu")
    return en, de


@pytest.fixture(scope="session")
def train50():
    return read_conllu(DATA / "train50.conllu")


@pytest.fixture(scope="session")
def stats50():
    return read_conllu(DATA / "stats50.conllu")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
