import numpy as np
import pytest

from uprad.design import budget_from_noise_model
from uprad.fisher import decompose, pair_jacobians
from uprad.geometry import PlatformState, Scenario
from uprad.montecarlo import sample_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_scenario(rng, n_t=4, n_r=6, **kw):
    return sample_scenario(rng, n_t, n_r, **kw)


def decomposition(scenario):
    return decompose(pair_jacobians(scenario), budget_from_noise_model(scenario),
                     scenario.n_t, scenario.n_r)


def stationary(pos):
    return PlatformState(pos, [0.0, 0.0, 0.0])


@pytest.fixture
def simple_scenario():
    """One Tx on +x, one Rx on +y, stationary target at the origin."""
    return Scenario([stationary([5000, 0, 0])], [stationary([0, 5000, 0])],
                    stationary([0, 0, 0]))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(number, title, ok, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
                                + (f" -- {detail}" if detail else ""))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
