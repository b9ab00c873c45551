import pytest

from bjjcavity.model import ReducedParams


@pytest.fixture
def fig1():
    return ReducedParams.from_tilt(3.0, 0.02, -0.65, 0.07)


def uncoupled(r):
    return ReducedParams.from_tilt(r, 0.0, 0.0, 1.0)


# acceptance summary: one line per criterion, printed after the run
_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if key == "acceptance":
            _ACCEPTANCE.append((value, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in sorted(_ACCEPTANCE, key=lambda item: int(item[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")
