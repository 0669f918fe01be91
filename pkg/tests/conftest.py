"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

import pytest

_results: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is not None:
        _results.setdefault(crit, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_results, key=int):
        ok = all(o == "passed" for o in _results[crit])
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture
def criterion(record_property):
    def mark(n: int, title: str):
        record_property("criterion", str(n))
        record_property("title", title)
    return mark
