import json

import numpy as np
import pytest

from mgpi.bellman import apply_bellman, apply_policy_operator
from mgpi.errors import ParameterOutOfRange, RankDeficient
from mgpi.game import StochasticPolicyPair, q_from_v, random_game
from mgpi.linear_game import (
    LinearGameModel,
    assemble_local_matrix,
    beta_backup,
    cost_model,
    induced_values,
    linear_game_from_dict,
    linear_game_from_weights,
    linear_generalized_pi,
    load_linear_game,
    one_hot_linear_game,
    random_linear_game,
)
from mgpi.planners import generalized_pi_iterates, solve_equilibrium


class TestModel:
    def test_random_model_is_exactly_linear(self):
        lg = random_linear_game(0, 12, 4)
        assert lg.d == 4
        assert np.allclose(lg.features @ lg.theta, lg.base.reward, atol=1e-12)

    def test_rejects_nonlinear_rewards(self):
        lg = random_linear_game(1, 6, 3)
        with pytest.raises(ValueError):
            LinearGameModel(lg.features, lg.theta * 0.5, lg.eta, lg.anchors, lg.base)

    def test_rejects_thin_anchor_set(self):
        lg = random_linear_game(2, 6, 3)
        with pytest.raises(RankDeficient):
            LinearGameModel(lg.features, lg.theta, lg.eta, lg.anchors[:2], lg.base)

    def test_file_round_trip(self, tmp_path):
        lg = random_linear_game(3, 8, 3)
        path = tmp_path / "lin.json"
        path.write_text(json.dumps(lg.to_dict()))
        again = load_linear_game(path)
        assert again.anchors == lg.anchors
        assert np.allclose(again.features, lg.features)

    def test_discount_may_come_from_caller(self):
        raw = random_linear_game(4, 5, 2, discount=0.7).to_dict()
        raw.pop("discount")
        assert linear_game_from_dict(raw, 0.7).discount == 0.7


class TestAssembly:
    def test_zero_weights(self):
        lg = random_linear_game(0, 5, 3)
        assert np.all(assemble_local_matrix(lg, np.zeros(3), 2) == 0)

    def test_one_hot_reproduces_tabular_matrix(self):
        game = random_game(0, 4, (2, 3), discount=0.8)
        lg = one_hot_linear_game(game)
        V = np.random.default_rng(0).random(4)
        q = q_from_v(game, V)
        for s in range(4):
            assert np.allclose(assemble_local_matrix(lg, lg.beta_of(V), s), game.local(q, s), atol=1e-14)

    def test_entries_are_dot_products(self):
        lg = random_linear_game(5, 6, 3)
        beta = np.array([0.2, -0.4, 1.1])
        A = assemble_local_matrix(lg, beta, 3)
        base = lg.base
        for u in range(base.n_max[3]):
            for v in range(base.n_min[3]):
                assert A[u, v] == pytest.approx(lg.features[base.index(3, u, v)] @ beta, abs=1e-14)


class TestBackup:
    def test_one_hot_policy_backup(self):
        game = random_game(1, 4, (2, 2), discount=0.8)
        lg = one_hot_linear_game(game)
        pol = StochasticPolicyPair.random(game, 0)
        V = np.random.default_rng(1).random(4)
        beta = beta_backup(lg, lg.beta_of(V), pol)
        assert np.allclose(beta, q_from_v(game, apply_policy_operator(game, pol, V)), atol=1e-12)

    def test_zero_model_stays_zero(self):
        lg = random_linear_game(2, 5, 3)
        zero = linear_game_from_weights(lg.features, np.zeros(3), lg.eta, lg.discount,
                                        lg.base.n_max, lg.base.n_min)
        assert np.allclose(beta_backup(zero, np.zeros(3), "bellman"), 0.0)

    def test_bellman_backup_matches_tabular(self):
        lg = random_linear_game(3, 20, 4)
        V = np.random.default_rng(3).random(20)
        beta = beta_backup(lg, lg.beta_of(V), "bellman")
        TV, _ = apply_bellman(lg.base, V)
        assert np.allclose(lg.features @ beta, q_from_v(lg.base, TV), atol=1e-8)


class TestPlanner:
    def test_one_hot_matches_tabular(self):
        game = random_game(4, 5, (2, 2), discount=0.6)
        lg = one_hot_linear_game(game)
        betas, _ = linear_generalized_pi(lg, lg.beta_of(np.zeros(5)), 2, 3, 6)
        Vs = generalized_pi_iterates(game, np.zeros(5), 2, 3, 6)
        for b, V in zip(betas, Vs):
            assert np.allclose(b, lg.beta_of(V), atol=1e-10)

    def test_converges_to_equilibrium(self):
        lg = random_linear_game(6, 30, 4, discount=0.5)
        J = solve_equilibrium(lg.base)
        betas, trace = linear_generalized_pi(lg, lg.theta, 3, 4, 25, reference=J)
        assert np.max(np.abs(induced_values(lg, betas[-1]) - J)) < 1e-6

    def test_stationary_at_equilibrium(self):
        lg = random_linear_game(7, 10, 3, discount=0.5)
        J = solve_equilibrium(lg.base)
        beta = lg.beta_of(J)
        betas, _ = linear_generalized_pi(lg, beta, 2, 3, 3)
        assert np.allclose(induced_values(lg, betas[-1]), J, atol=1e-9)

    def test_anchor_choice_does_not_matter(self):
        lg = random_linear_game(8, 15, 3, discount=0.6)
        other = tuple(range(lg.base.num_triples - 1, -1, -1))
        lg2 = LinearGameModel(lg.features, lg.theta, lg.eta, other, lg.base)
        b1, _ = linear_generalized_pi(lg, lg.theta, 2, 3, 5)
        b2, _ = linear_generalized_pi(lg2, lg.theta, 2, 3, 5)
        assert np.allclose(induced_values(lg, b1[-1]), induced_values(lg2, b2[-1]), atol=1e-8)

    def test_matrix_game_count(self):
        lg = random_linear_game(9, 12, 3)
        _, trace = linear_generalized_pi(lg, lg.theta, 2, 3, 4)
        assert trace.counter.matrix_games == 4 * 3 * lg.reach_sum()

    def test_infinite_rollout_rejected(self):
        lg = random_linear_game(0, 4, 2)
        with pytest.raises(ValueError):
            linear_generalized_pi(lg, lg.theta, float("inf"), 2, 1)


class TestCostModel:
    def test_backup_term(self):
        assert cost_model(1, 1, 1, 1, 1, 1, 1).backup_ops_per_anchor == 3

    def test_lsq_floor(self):
        rep = cost_model(10, 1, 1, 1, 1, 1, 1)
        assert rep.lsq_ops == 333

    def test_game_count(self):
        assert cost_model(3, 2, 2, 5, 40, 1, 2).matrix_game_count == 80

    def test_total_is_sum(self):
        rep = cost_model(4, 3, 2, 6, 17, 2, 5)
        assert rep.total_per_iteration == rep.backup_ops + rep.lsq_ops + rep.assembly_ops

    def test_monotone(self):
        base = dict(d=3, r=2, a_max=2, anchor_count=4, reach_sum=10, m=2, H=3)
        ref = cost_model(**base)
        for key in base:
            bigger = dict(base, **{key: base[key] + 1})
            rep = cost_model(**bigger)
            assert rep.total_per_iteration >= ref.total_per_iteration
            assert rep.matrix_game_count >= ref.matrix_game_count

    def test_rejects_nonpositive(self):
        with pytest.raises(ParameterOutOfRange):
            cost_model(0, 1, 1, 1, 1, 1, 1)
