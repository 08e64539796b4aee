import pytest

from qoesim.config import ScenarioConfig
from qoesim.scenario import run


@pytest.fixture(scope="session")
def short_runs():
    """One 60 s run per architecture with link recording, shared across tests."""
    out = {}
    for arch in ("non_adaptive", "adaptive", "cross"):
        cfg = ScenarioConfig(architecture=arch, seed=3, horizon_s=60.0)
        out[arch] = run(cfg, record_links=True)
    return out


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
