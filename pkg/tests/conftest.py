import numpy as np
import pytest

from mgpi.game import game_from_arrays


@pytest.fixture
def self_loop():
    """One state, one action each, reward 0.5, discount 0.9."""
    return game_from_arrays([[[0.5]]], [[[[1.0]]]], 0.9)


@pytest.fixture
def one_state_matrix_game():
    """Single absorbing state whose one-step matrix from V=0 is [[3,1],[0,2]] / 4.

    Rewards must lie in [0, 1], so the classic example is scaled by 1/4.
    """
    g = np.array([[3.0, 1.0], [0.0, 2.0]]) / 4.0
    return game_from_arrays([g], [np.ones((2, 2, 1))], 0.5)


# (criterion, passed, detail) rows filled in by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Log one criterion outcome for the end-of-run summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS.append((number, bool(passed), detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
