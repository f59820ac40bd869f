import shutil

import pytest

from wordste import solver
from support import ACCEPTANCE

HAVE_SOLVER = shutil.which("z3") is not None


def pytest_collection_modifyitems(config, items):
    # tests marked session_last run after everything else (they read
    # counters the rest of the session fills in)
    items.sort(key=lambda it: it.get_closest_marker("session_last") is not None)
    skip = pytest.mark.skip(reason="z3 not on PATH")
    for it in items:
        if "needs_solver" in it.keywords and not HAVE_SOLVER:
            it.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line("markers", "session_last: run at the end of the session")
    config.addinivalue_line("markers", "needs_solver: requires an SMT solver on PATH")


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    if ACCEPTANCE:
        tr.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            ok, detail = ACCEPTANCE[n]
            tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    v = solver.VALIDATION
    tr.write_line(
        f"solver model validation: {v['sat_answers']} sat answers, "
        f"{v['validated']} validated, {v['failures']} failures"
    )
