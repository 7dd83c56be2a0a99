from pathlib import Path

import pytest

from tll.signature import load_file, prelude

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def sig():
    return prelude()


@pytest.fixture(scope="session")
def corpus():
    """Checked signatures of the positive corpus files, by stem."""
    names = ["identity", "erasure", "llist", "lvec", "poly", "closure"]
    return {n: load_file(CORPUS / f"{n}.tll") for n in names}


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.failed = rep.failed
