import pytest

from aoifl.aoi import StalenessParams
from aoifl.config import default_channel
from aoifl.phy import TrainingEnergyParams


@pytest.fixture
def cp():
    return default_channel()


@pytest.fixture
def sp():
    return StalenessParams()


@pytest.fixture
def tp():
    return TrainingEnergyParams()


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects ``(criterion, passed, detail)`` lines for the terminal summary."""
    return request.config.stash[_ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines, key=lambda x: x[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
