from __future__ import annotations

from pathlib import Path

import pytest

from argbench.graphs import Topology
from argbench.puzzles import default_ontology, make_instance

FIXTURES = Path(__file__).parent / "fixtures"

# acceptance outcomes collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def ontology():
    return default_ontology()


@pytest.fixture
def chain2_instance():
    return make_instance(Topology.linear(2), ["Alice", "Bob"], "the train is late")


@pytest.fixture
def star12_instance():
    return make_instance(
        Topology.star([1, 2]), ["Alice", "Bob", "Charlie", "Dan"], "the train is late"
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
