"""Acceptance summary: one PASS/FAIL line per criterion after the run."""

import pytest

_outcomes: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _outcomes.setdefault(number, {"title": title, "failed": False, "seen": False, "notes": []})
    if report.when == "call" or report.failed or report.skipped:
        entry["seen"] = True
        entry["failed"] |= report.failed
        entry["skipped"] = report.skipped and not report.failed
    if report.when == "call":
        entry["notes"] += [v for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        entry = _outcomes[number]
        status = "FAIL" if entry["failed"] else "SKIP" if entry.get("skipped") else "PASS"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {entry['title']}")
        for note in entry["notes"]:
            terminalreporter.write_line(f"              {note}")
