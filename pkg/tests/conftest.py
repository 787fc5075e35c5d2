import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.fixture
def record_criterion(request):
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""
    log = request.config.stash[_KEY]

    def record(number: int, title: str, ok: bool, detail: str):
        log[number] = (title, bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        title, ok, detail = log[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
