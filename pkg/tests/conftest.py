import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from retract_iter.mappings import paper_pair  # noqa: E402


@pytest.fixture
def pair():
    return paper_pair()


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="config.yaml"):
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import TITLES

    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion[" in rep.nodeid:
                number = int(rep.nodeid.rsplit("criterion_", 1)[1].rstrip("]"))
                lines.append((number, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for number, status in sorted(lines):
            terminalreporter.write_line(f"criterion {number}: {status}  {TITLES[number]}")
