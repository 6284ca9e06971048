from __future__ import annotations

import pytest

from gradedhoare.corpus import load_cases
from gradedhoare.syntax import Model

_criteria: dict[str, tuple[str, str, float]] = {}


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "criterion(id, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call: pytest.CallInfo):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        # several tests may share a criterion: any failure is sticky, times add up
        status = "PASS" if report.passed else "FAIL"
        _, prev, spent = _criteria.get(cid, (title, "PASS", 0.0))
        _criteria[cid] = (title, "FAIL" if "FAIL" in (prev, status) else "PASS", spent + report.duration)


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria, key=lambda c: int(c[2:])):
        title, status, duration = _criteria[cid]
        terminalreporter.write_line(f"{cid} {status} {title} ({duration:.2f}s)")


@pytest.fixture(scope="session")
def cases():
    return load_cases()


@pytest.fixture
def xyz() -> Model:
    return Model.make(("x", "y", "z"), 0, 3)
