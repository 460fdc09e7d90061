from pathlib import Path

import pytest

from systolic_cost.arch import load_network

DATA = Path(__file__).parent / "data"

_verdicts: dict[int, str] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def load():
    return lambda name: load_network(DATA / name)


@pytest.fixture
def verdict():
    """Record and assert an acceptance criterion; the line is echoed in the run summary."""
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _verdicts[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_verdicts):
            terminalreporter.write_line(_verdicts[number])
