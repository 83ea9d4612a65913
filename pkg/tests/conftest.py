import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kgfactcheck.evidence import FileStubProvider  # noqa: E402
from kgfactcheck.rules import parse_rules  # noqa: E402
from kgfactcheck.triple_store import load_triples  # noqa: E402

DATA = Path(__file__).resolve().parent.parent / "data" / "cold_copper_tears"


@pytest.fixture(scope="session")
def cct_paths():
    return {"kg": DATA / "kg.tsv", "rules": DATA / "rules.txt",
            "oracle": DATA / "oracle.tsv", "evidence": DATA / "evidence21.tsv"}


@pytest.fixture
def cct_store(cct_paths):
    return load_triples(cct_paths["kg"])


@pytest.fixture
def cct_rules(cct_paths):
    return parse_rules(cct_paths["rules"], strict=True)


@pytest.fixture
def cct_oracle(cct_paths):
    return FileStubProvider.from_path(cct_paths["oracle"])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
