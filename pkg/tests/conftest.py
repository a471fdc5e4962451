import pytest

_results = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            _results.setdefault(item.nodeid, [marker.args[0], None])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = _results.get(item.nodeid)
    if entry is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry[1] = report.outcome


def pytest_terminal_summary(terminalreporter):
    ran = [v for v in _results.values() if v[1] is not None]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in ran:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")
