import numpy as np
import pytest

from mgpi.bellman import rollout
from mgpi.errors import DimensionMismatch, ParameterOutOfRange
from mgpi.game import StochasticPolicyPair, game_from_arrays, random_game
from mgpi.linear_fa import StateFeatureScheme, fa_pi, random_features
from mgpi.planners import solve_equilibrium
from mgpi.stochastic_pi import (
    StepSchedule,
    check_assumption2,
    draw_batch,
    exploring_starts,
    fit_visited,
    sample_return,
    sample_returns,
    sampled_rate,
    stochastic_pi,
)


def _deterministic_game(n_min=2):
    """Deterministic transitions; with ``n_min=1`` every greedy policy is pure too."""
    rng = np.random.default_rng(0)
    S = 4
    g = [rng.random((2, n_min)) for _ in range(S)]
    P = []
    for s in range(S):
        T = np.zeros((2, n_min, S))
        for u in range(2):
            for v in range(n_min):
                T[u, v, (s + u + 2 * v + 1) % S] = 1.0
        P.append(T)
    return game_from_arrays(g, P, 0.6)


class TestSchedule:
    @pytest.mark.parametrize("p", [0.51, 0.75, 1.0])
    def test_accepts_robbins_monro_exponents(self, p):
        assert StepSchedule.harmonic(1.0, p).gamma(3) == pytest.approx(4 ** -p)

    @pytest.mark.parametrize("p", [0.5, 0.3, 1.01, 2.0])
    def test_rejects_other_exponents(self, p):
        with pytest.raises(ParameterOutOfRange):
            StepSchedule.harmonic(1.0, p)

    def test_explicit(self):
        sched = StepSchedule.explicit([1.0, 0.5])
        assert sched.gamma(1) == 0.5
        with pytest.raises(ParameterOutOfRange):
            sched.gamma(2)


class TestSampling:
    def test_zero_depth_is_exact(self):
        game = random_game(0, 3)
        B = np.array([0.1, 0.2, 0.3])
        out = sample_returns(game, StochasticPolicyPair.uniform(game), B, 0, [2, 2, 0], 0)
        assert out.tolist() == [0.3, 0.3, 0.1]

    def test_deterministic_game_has_no_variance(self):
        game = _deterministic_game()
        pol = StochasticPolicyPair.deterministic(game, [0, 1, 0, 1], [1, 1, 0, 0])
        B = np.arange(4.0)
        exact = rollout(game, pol, B, 5)
        out = sample_returns(game, pol, B, 5, np.repeat(np.arange(4), 10), 1)
        assert np.allclose(out, np.repeat(exact, 10), atol=1e-12)

    def test_mean_within_clt_band(self):
        game = random_game(3, 3, (2, 2), 1.0, 0.8)
        pol = StochasticPolicyPair.random(game, 0)
        B = np.array([0.3, 1.0, 2.0])
        samples = sample_returns(game, pol, B, 4, np.ones(100_000, dtype=int), 7)
        exact = rollout(game, pol, B, 4)[1]
        se = samples.std() / np.sqrt(samples.size)
        assert abs(samples.mean() - exact) < 3 * se

    def test_seeded(self):
        game = random_game(1, 5)
        pol = StochasticPolicyPair.uniform(game)
        a = sample_return(game, pol, np.zeros(5), 3, 0, 42)
        assert a == sample_return(game, pol, np.zeros(5), 3, 0, 42)

    def test_rejects_bad_start(self):
        game = random_game(1, 3)
        with pytest.raises(DimensionMismatch):
            sample_returns(game, StochasticPolicyPair.uniform(game), np.zeros(3), 1, [3], 0)


class TestBatch:
    def test_duplicates_averaged_and_unvisited_zero(self):
        game = random_game(2, 4)
        pol = StochasticPolicyPair.uniform(game)
        batch = draw_batch(game, pol, np.array([1.0, 2.0, 3.0, 4.0]), 0, [1, 1, 3], 0)
        assert batch.visited.tolist() == [1, 3]
        assert batch.returns.tolist() == [0.0, 2.0, 0.0, 4.0]
        assert batch.counts.tolist() == [0, 2, 0, 1]

    def test_minimum_norm_fit(self):
        game = random_game(2, 4)
        batch = draw_batch(game, StochasticPolicyPair.uniform(game), np.arange(4.0), 0, [1, 2], 0)
        theta = fit_visited(StateFeatureScheme.tabular(4), batch)
        assert theta.tolist() == pytest.approx([0.0, 1.0, 2.0, 0.0])

    def test_exploring_starts_validated(self):
        with pytest.raises(ParameterOutOfRange):
            exploring_starts(3, [0.5, 0.5, 0.0])
        assert exploring_starts(4).tolist() == [0.25] * 4


class TestRates:
    def test_condition_example(self):
        rep = check_assumption2(0.5, 3, 4, 1.0)
        assert rep.lhs == pytest.approx(0.546875, abs=1e-15)
        assert rep.satisfied

    def test_large_lookahead(self):
        assert check_assumption2(0.9, 3, 500, 5.0).satisfied

    def test_discount_near_one(self):
        assert not check_assumption2(0.999, 3, 4, 1.0).satisfied

    def test_rate_expression(self):
        a = 0.5 ** 3
        assert sampled_rate(0.5, 3, 4, 1.0) == pytest.approx(a + 1.5 * (1 + 0.125) * a / 0.5)

    def test_rejects_bad_discount(self):
        with pytest.raises(ParameterOutOfRange):
            check_assumption2(1.0, 1, 1, 1.0)


class TestRun:
    def test_noise_free_reduces_to_least_squares_pi(self):
        game = _deterministic_game(n_min=1)
        scheme = random_features(0, 4, 2, 4)
        scheme = StateFeatureScheme(scheme.phi, (0, 1, 2, 3))
        run = stochastic_pi(game, scheme, np.zeros(2), 3, 2, StepSchedule.explicit([1.0] * 6), 6, 0,
                            starts_per_iter="all")
        ref = fa_pi(game, scheme, np.zeros(2), 3, 2, 6)
        for a, b in zip(run.thetas, ref.thetas):
            assert np.allclose(a, b, atol=1e-10)

    def test_stationary_when_exact_and_noise_free(self):
        game = _deterministic_game(n_min=1)
        J = solve_equilibrium(game)
        run = stochastic_pi(game, StateFeatureScheme.tabular(4), J, 3, 3, StepSchedule.harmonic(), 5, 0,
                            starts_per_iter="all")
        assert np.allclose(run.thetas[-1], J, atol=1e-9)

    def test_short_run_approaches_equilibrium(self):
        game = random_game(7, 5, (2, 2), 0.5, 0.5)
        run = stochastic_pi(game, StateFeatureScheme.tabular(5), np.zeros(5), 3, 4, StepSchedule.harmonic(),
                            300, 0, starts_per_iter="all")
        assert run.trace.sup_errors[-1] < 0.1

    def test_partial_visitation_shrinks_unvisited_weights(self):
        """Unvisited coordinates get the minimum-norm value 0 in each fit."""
        game = _deterministic_game(n_min=1)
        J = solve_equilibrium(game)
        run = stochastic_pi(game, StateFeatureScheme.tabular(4), J, 0, 1, StepSchedule.explicit([1.0]), 1, 0,
                            starts_per_iter=1)
        assert np.count_nonzero(run.thetas[-1]) == 1

    def test_seeded(self):
        game = random_game(8, 4, (2, 2), 0.5, 0.5)
        args = (game, StateFeatureScheme.tabular(4), np.zeros(4), 2, 3, StepSchedule.harmonic(), 20, 11)
        assert np.array_equal(stochastic_pi(*args).thetas[-1], stochastic_pi(*args).thetas[-1])
