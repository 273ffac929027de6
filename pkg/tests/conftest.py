import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion_" in rep.nodeid and rep.when == "call":
                name = rep.nodeid.split("::")[-1]
                detail = dict(rep.user_properties).get("detail", "")
                rows.append((name, "PASS" if outcome == "passed" else "FAIL", detail))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, status, detail in sorted(rows):
            num = int(name.split("_")[2])
            terminalreporter.write_line(f"criterion {num:2d} {status}  {detail}")
