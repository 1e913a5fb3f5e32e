import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(number, title): tracked acceptance criterion; the terminal "
        "summary prints one pass/fail line per criterion",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = (marker.args[0], marker.args[1])
    if report.when == "setup" and report.skipped:
        _RESULTS.setdefault(key, "SKIP (data not supplied)")
    elif report.when == "call":
        if not report.passed:
            _RESULTS[key] = "FAIL"
        else:
            _RESULTS.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in sorted(_RESULTS):
        status = _RESULTS[(number, title)]
        terminalreporter.write_line(f"criterion {number:2d} [{title}]: {status}")
