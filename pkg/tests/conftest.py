import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cascade_lab.model import SignalModel


@pytest.fixture(scope="session")
def model23():
    """q = 2/3, i.e. epsilon ~ 2.32 and Q = 2."""
    return SignalModel.from_q(2 / 3)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; assert after recording so failures are listed too."""

    def record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
