import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _, ok, props = _CRITERIA.get(number, (title, True, []))
        _CRITERIA[number] = (title, ok and rep.passed, props + list(item.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, props = _CRITERIA[number]
        detail = "; ".join(f"{k}={v}" for k, v in props)
        tr.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}" + (f"  ({detail})" if detail else ""))
