import math
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from feedback_cooling import sde

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# Fast Monte Carlo settings: quarter period = 250 steps, 16 batches.
LIGHT = sde.SimConfig(dt=math.pi / 500, t_total=1000 * math.pi, burn_in=100 * math.pi,
                      n_traj=16, seed=2024)


@pytest.fixture(scope="session")
def light_cfg():
    return LIGHT


class _DelayedCache:
    """Optimized delayed-feedback results shared by every test in the session."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._results = {}

    def __call__(self, gamma, eta):
        key = (gamma, eta)
        if key not in self._results:
            gain = sde.optimize_delayed_gain(gamma, eta, self.cfg)
            self._results[key] = sde.simulate_delayed_cd(gamma, eta, gain, self.cfg)
        return self._results[key]


@pytest.fixture(scope="session")
def delayed():
    return _DelayedCache(LIGHT)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record a one-line verdict; the lines are echoed in the terminal summary."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
