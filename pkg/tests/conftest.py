"""Shared fixtures and the acceptance-summary reporting hook."""

from __future__ import annotations

import pytest

from polycl.datagen import make_corpus
from polycl.smiles_core import Vocabulary

# (criterion name, passed, detail) tuples appended by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tiny_corpus() -> list[str]:
    """40 distinct generated repeat units; enough variety for most tests."""
    return make_corpus(40, seed=3)


@pytest.fixture(scope="session")
def tiny_vocab(tiny_corpus) -> Vocabulary:
    return Vocabulary.from_corpus(tiny_corpus)
