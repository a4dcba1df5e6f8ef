import pytest

_ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        number, name = marker.args
        _ACCEPTANCE_RESULTS[number] = (name, rep.passed)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(number, name): acceptance criterion check"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE_RESULTS):
        name, passed = _ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {name}: {status}")
