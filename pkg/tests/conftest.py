import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _results.setdefault(number, {"title": title, "passed": True, "notes": [], "ran": False})
    if report.when == "call":
        entry["ran"] = True
        entry["notes"].extend(v for k, v in item.user_properties if k == "note")
    if report.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        r = _results[number]
        status = "PASS" if r["passed"] and r["ran"] else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number}: {r['title']}")
        for note in r["notes"]:
            terminalreporter.write_line(f"    {note}")
