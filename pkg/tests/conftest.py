from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture
def three_doc_corpus() -> Path:
    return DATA / "corpus_3docs.jsonl"


@pytest.fixture
def three_doc_entities():
    return [
        ("D1", ["remdesivir", "favipiravir"]),
        ("D2", ["remdesivir", "favipiravir"]),
        ("D3", ["remdesivir", "ritonavir"]),
    ]


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log() -> list[str]:
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
