import pytest

from dirac_workbench.dirac import analyze
from dirac_workbench.model import load_model


@pytest.fixture(scope="session")
def circle_model():
    return load_model("circle")


@pytest.fixture(scope="session")
def circle(circle_model):
    return analyze(circle_model)


@pytest.fixture(scope="session")
def pinned():
    return analyze(load_model("pinned_line"))


@pytest.fixture(scope="session")
def free():
    return analyze(load_model("free"))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one test per acceptance criterion")


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion[" in report.nodeid:
        number = int(report.nodeid.rsplit("[", 1)[1].rstrip("]"))
        _ACCEPTANCE[number] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status = "PASS" if _ACCEPTANCE[number] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}")
