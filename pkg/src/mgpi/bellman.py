"""Dynamic-programming operators on value vectors.

``T_{mu,nu}`` (fixed policy pair), ``T_mu`` (fixed maximizer, minimizing
reply), the Shapley operator ``T`` (a matrix game per state), m-step rollouts,
H-step lookahead and their composite ``T_{m,H} V = T_{mu,nu}^m T^{H-1} V`` where
``(mu, nu)`` is the lookahead policy of ``V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .game import (
    INFINITE,
    GameModel,
    StochasticPolicyPair,
    _aggregate,
    check_value,
    exact_policy_value,
    q_from_v,
)
from .matrix_game import best_response_value, solve_matrix_game
from .trace import OpCounter


@dataclass(frozen=True)
class LookaheadResult:
    backed_value: np.ndarray  # T^{H-1} V
    policy: StochasticPolicyPair  # greedy with respect to backed_value
    top_value: np.ndarray  # T^H V
    one_step: np.ndarray  # T V, kept for the Bellman residual


def _check_depth(m):
    if m == INFINITE:
        return
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 0:
        raise ValueError(f"rollout depth must be a nonnegative integer or INFINITE, got {m!r}")


def apply_policy_operator(game: GameModel, pol: StochasticPolicyPair, V, counter: OpCounter | None = None):
    """``T_{mu,nu} V(s) = mu(s)^T A_{V,s} nu(s)``."""
    V = check_value(game, V)
    w = pol.joint_weights(game)
    if counter is not None:
        counter.policy_applications += 1
    return np.add.reduceat(w * q_from_v(game, V), game.offsets[:-1])


def apply_bellman(game: GameModel, V, counter: OpCounter | None = None):
    """Shapley operator: per-state matrix-game value of ``A_{V,s}``.

    Returns ``(TV, greedy)`` where ``greedy`` holds the optimal strategies.
    """
    q = q_from_v(game, V)
    TV = np.empty(game.num_states)
    mu, nu = [], []
    for s in range(game.num_states):
        sol = solve_matrix_game(game.local(q, s))
        TV[s] = sol.value
        mu.append(sol.row_strategy)
        nu.append(sol.col_strategy)
    if counter is not None:
        counter.bellman_applications += 1
        counter.matrix_games += game.num_states
    return TV, StochasticPolicyPair(tuple(mu), tuple(nu))


def _maximizer_strategies(game, mu):
    if isinstance(mu, StochasticPolicyPair):
        mu = mu.mu
    if len(mu) != game.num_states:
        raise DimensionMismatch("maximizer policy does not cover every state")
    out = []
    for s, m in enumerate(mu):
        m = np.asarray(m, dtype=float)
        if m.shape != (game.n_max[s],):
            raise DimensionMismatch(f"maximizer strategy at state {s} has wrong length")
        out.append(m)
    return out


def apply_min_operator(game: GameModel, mu, V, counter: OpCounter | None = None):
    """``T_mu V``: minimizer's best pure reply at each state against ``mu(s)``.

    Returns ``(T_mu V, replies)`` with ``replies[s]`` the minimizing column.
    """
    mu = _maximizer_strategies(game, mu)
    q = q_from_v(game, V)
    out = np.empty(game.num_states)
    replies = np.empty(game.num_states, dtype=int)
    for s in range(game.num_states):
        out[s], replies[s] = best_response_value(game.local(q, s), mu[s])
    if counter is not None:
        counter.policy_applications += 1
    return out, replies


def rollout(game: GameModel, pol: StochasticPolicyPair, V, m, counter: OpCounter | None = None):
    """``T_{mu,nu}^m V``; ``m=INFINITE`` returns ``J^{mu,nu}`` exactly."""
    _check_depth(m)
    V = check_value(game, V).copy()
    if m == INFINITE:
        return exact_policy_value(game, pol)
    if m == 0:
        return V
    w = pol.joint_weights(game)
    W = _aggregate(game, w)
    P = (W @ game.transition_matrix).tocsr()
    g = W @ game.reward
    for _ in range(int(m)):
        V = g + game.discount * (P @ V)
    if counter is not None:
        counter.policy_applications += int(m)
    return V


def lookahead(game: GameModel, V, H: int, counter: OpCounter | None = None) -> LookaheadResult:
    """H-fold Shapley backup; the policy is the greedy pair of the H-th pass."""
    if not isinstance(H, (int, np.integer)) or H < 1:
        raise ValueError(f"lookahead depth must be a positive integer, got {H!r}")
    W = check_value(game, V).copy()
    one_step = None
    for _ in range(H):
        backed = W
        W, policy = apply_bellman(game, backed, counter)
        if one_step is None:
            one_step = W
    return LookaheadResult(backed_value=backed, policy=policy, top_value=W, one_step=one_step)


def composite_step(game: GameModel, V, m, H: int, counter: OpCounter | None = None):
    """One generalized-PI iterate ``T_{m,H} V`` plus the lookahead it used."""
    _check_depth(m)
    la = lookahead(game, V, H, counter)
    return rollout(game, la.policy, la.backed_value, m, counter), la


def composite_tmh(game: GameModel, V, m, H: int) -> np.ndarray:
    """``T_{m,H} V = T_{mu,nu}^m T^{H-1} V`` with ``(mu, nu)`` the lookahead policy."""
    return composite_step(game, V, m, H)[0]


def bellman_residual(game: GameModel, V) -> float:
    TV, _ = apply_bellman(game, V)
    return float(np.max(np.abs(TV - np.asarray(V))))


def rate_power(alpha: float, m) -> float:
    """``alpha**m`` with the convention ``alpha**INFINITE == 0``."""
    return 0.0 if m == INFINITE else alpha ** m
