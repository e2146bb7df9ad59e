import pytest

from spectrobench.core import OpticalSystem

# filled by test_acceptance, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def system():
    """75 mm lenses, 300 grooves/mm, visible band."""
    return OpticalSystem(0.075, 300e3, 400e-9, 700e-9)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
