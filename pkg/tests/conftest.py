"""Collect outcomes of ``acceptance``-marked tests and print one line each."""

import pytest

_results = {}


def pytest_runtest_logreport(report):
    label = getattr(report, "acceptance_label", None)
    if label is None:
        return
    if report.when == "call" or report.outcome == "failed":
        prev = _results.get(label, "PASS")
        _results[label] = "PASS" if report.passed and prev == "PASS" else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        num, name = marker.args
        outcome.get_result().acceptance_label = (num, name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_results.items()):
        terminalreporter.write_line(f"criterion {num:>2} {status}  {name}")
