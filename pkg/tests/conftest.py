import re

import pytest

from codedmr.design import design_for


@pytest.fixture(scope="session")
def example_design():
    """The q=2, k=3 design behind the K=6 worked example."""
    return design_for(2, 3)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", getattr(rep, "nodeid", ""))
            if m and (rep.when == "call" or outcome == "error"):
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines.append((int(m.group(1)), f"criterion {m.group(1)} ({m.group(2)}): {verdict}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
