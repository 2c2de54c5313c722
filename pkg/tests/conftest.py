"""Shared fixtures and the acceptance-criteria summary printed at the end of a run."""
from __future__ import annotations

import pytest

from fxhekm import harness
from fxhekm.config import preset

_DETAILS: dict[int, str] = {}
_OUTCOMES: dict[int, str] = {}


def _criterion(item_or_report) -> int | None:
    name = item_or_report.nodeid.rsplit("::", 1)[-1]
    if name.startswith("test_criterion_"):
        return int(name.split("_")[2])
    return None


@pytest.fixture
def acceptance(request):
    """Record a one-line measurement for the summary: ``acceptance("ANR -19.4 dB")``."""
    number = _criterion(request.node)

    def record(detail: str) -> None:
        _DETAILS[number] = detail

    return record


def pytest_runtest_logreport(report):
    number = _criterion(report)
    if number is None:
        return
    if report.when == "call" or report.failed:
        if report.failed or _OUTCOMES.get(number) != "FAIL":
            _OUTCOMES[number] = "FAIL" if report.failed else ("PASS" if report.passed else "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        detail = _DETAILS.get(number, "")
        terminalreporter.write_line(f"criterion {number:2d}: {_OUTCOMES[number]}  {detail}")


@pytest.fixture(scope="session")
def scenario1_result():
    return harness.run_experiment(preset("scenario1"))


@pytest.fixture(scope="session")
def scenario2_result():
    return harness.run_experiment(preset("scenario2"))
