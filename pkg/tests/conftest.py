import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[1]
    if report.when == "call" or report.failed:
        prev = _outcomes.get(name, (True, 0.0))
        _outcomes[name] = (prev[0] and report.passed, prev[1] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    from test_acceptance import CRITERIA
    terminalreporter.section("acceptance criteria")
    for name in sorted(_outcomes, key=lambda n: int(n.split("_")[2])):
        ok, secs = _outcomes[name]
        k = int(name.split("_")[2])
        terminalreporter.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {CRITERIA[k]}  [{secs:.2f}s]")
