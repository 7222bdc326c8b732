import pytest

from helpers import T
from kgwalks.rdf_graph import build_graph


@pytest.fixture
def chain():
    """A -p-> B -q-> C"""
    return build_graph([T("A", "p", "B"), T("B", "q", "C")])



# criterion number -> (passed, description, detail); filled by the acceptance tests
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} -- {detail}")
