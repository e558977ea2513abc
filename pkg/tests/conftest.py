import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cogcic.bounds import SearchBudget
from cogcic.conditions import CheckBudget

settings.register_profile(
    "cogcic", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("cogcic")

# Small budgets for unit tests; acceptance tests use the module defaults.
FAST = SearchBudget(restarts=2, weight_sweep=5, max_iters=200, refine_rounds=3, max_directions=12)
FAST_CHECK = CheckBudget(restarts=24, max_iters=200, concavity_pairs=50)


@pytest.fixture
def fast_budget():
    return FAST


@pytest.fixture
def fast_check():
    return FAST_CHECK


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def h2(p: float) -> float:
    """Binary entropy in bits, computed from scratch."""
    if p in (0.0, 1.0):
        return 0.0
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(capsys):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(label: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
