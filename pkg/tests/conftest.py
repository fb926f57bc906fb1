"""Shared pytest wiring: the acceptance criteria report one PASS/FAIL line each."""

import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    results = item.config.stash[_KEY]
    failed = rep.failed or (rep.when == "call" and rep.skipped)
    if rep.when == "call" or failed:
        detail = "; ".join(v for k, v in item.user_properties if k == "detail")
        results[number] = ("FAIL" if failed else "PASS", title, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        status, title, detail = results[number]
        line = f"{status} criterion {number:>2}: {title}"
        terminalreporter.write_line(line + (f" | {detail}" if detail else ""))
