"""Acceptance bookkeeping: one PASS/FAIL line per criterion in the summary."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        props = dict(item.user_properties)
        _RESULTS[mark.args[0]] = (mark.args[1], rep.passed, props.get("measured", ""), props.get("tolerance", ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_RESULTS):
        title, ok, measured, tol = _RESULTS[num]
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} | {measured} | tolerance: {tol}")
