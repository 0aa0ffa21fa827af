import pytest

_ACCEPTANCE: list = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for v in sorted(_ACCEPTANCE, key=lambda v: v.number):
        terminalreporter.write_line(v.line())
