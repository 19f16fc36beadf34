import pytest

from spdeis import _backend


def pytest_report_header(config):
    return f"spdeis backends: {', '.join(_backend.available())} (default {_backend.name()})"


@pytest.fixture(scope="session")
def compiled():
    if "compiled" not in _backend.available():
        pytest.skip("compiled extension not built")
    from spdeis import _kernels

    return _kernels


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(LINES):
        terminalreporter.write_line(LINES[n])
