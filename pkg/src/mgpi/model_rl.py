"""Model-based learning from a generative model.

Draw N successors for every (s, u, v), build the empirical game with the known
rewards, plan on it with lookahead policy iteration, and score the learned
policy pair on the true game.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bellman import lookahead, rollout
from .errors import AssumptionViolated, DimensionMismatch, MaxItersExceeded, ParameterOutOfRange
from .game import GameModel, StochasticPolicyPair, exact_policy_value, q_from_v
from .planners import check_assumption1, min_lookahead, solve_equilibrium, lookahead_pi_rate
from .trace import ConvergenceTrace


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """Successor counts per triple; ``induced`` uses ``count / N`` and the true rewards."""

    counts: sp.csr_matrix
    n_per_tuple: int
    induced: GameModel


def generative_sample(game: GameModel, N: int, rng) -> EmpiricalModel:
    """Exactly N i.i.d. successor draws for every triple."""
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool) or N < 1:
        raise ParameterOutOfRange(f"N={N!r} must be a positive integer")
    rng = np.random.default_rng(rng)
    P = game.transition_matrix
    data = np.empty(P.nnz, dtype=np.int64)
    for t in range(game.num_triples):
        lo, hi = P.indptr[t], P.indptr[t + 1]
        p = P.data[lo:hi]
        data[lo:hi] = rng.multinomial(int(N), p / p.sum())
    counts = sp.csr_matrix((data, P.indices.copy(), P.indptr.copy()), shape=P.shape)
    counts.eliminate_zeros()
    prob = counts.data / float(N)
    induced = game.with_transitions(counts.indptr, counts.indices, prob)
    return EmpiricalModel(counts, int(N), induced)


@dataclass(frozen=True)
class PlanResult:
    policy: StochasticPolicyPair
    value: np.ndarray  # value of ``policy`` on the planning model
    certificate: float  # upper bound on ||value - J*|| for the planning model
    iterations: int
    trace: ConvergenceTrace


def plan_on_model(model, m, H: int, eps_opt: float, max_iters: int = 10_000, strict: bool = True) -> PlanResult:
    """Lookahead policy iteration until the returned pair is certified ``eps_opt``-optimal.

    The certificate is ``||J^pi - V|| + ||TV - V|| / (1 - alpha)``, which bounds
    ``||J^pi - J*||`` on the planning model.
    """
    game = model.induced if isinstance(model, EmpiricalModel) else model
    if not eps_opt > 0:
        raise ParameterOutOfRange("eps_opt must be positive")
    if strict and not check_assumption1(game.discount, m, H).assumption1_satisfied:
        raise AssumptionViolated(f"lookahead condition fails for m={m}, H={H}")
    alpha = game.discount
    trace = ConvergenceTrace()
    V = np.zeros(game.num_states)
    for k in range(max_iters + 1):
        la = lookahead(game, V, H, trace.counter)
        res = float(np.max(np.abs(la.one_step - V)))
        trace.record(k, V, res)
        J = exact_policy_value(game, la.policy)
        cert = float(np.max(np.abs(J - V))) + res / (1.0 - alpha)
        if cert <= eps_opt:
            trace.termination = "converged"
            trace.final_value, trace.final_policy = V, la.policy
            return PlanResult(la.policy, J, cert, k, trace)
        V = rollout(game, la.policy, la.backed_value, m, trace.counter)
    trace.termination = "max_iters"
    raise MaxItersExceeded(f"planning not certified after {max_iters} iterations", V, trace)


@dataclass(frozen=True)
class PolicyScore:
    q_error: float
    v_error: float


def evaluate_learned_policy(true_game: GameModel, policy: StochasticPolicyPair, reference=None) -> PolicyScore:
    """Sup-norm gaps of ``Q^{mu,nu}`` and ``J^{mu,nu}`` to the equilibrium on the true game."""
    if len(policy.mu) != true_game.num_states:
        raise DimensionMismatch("policy does not cover the states of the true game")
    J_star = solve_equilibrium(true_game) if reference is None else np.asarray(reference, dtype=float)
    J = exact_policy_value(true_game, policy)
    q_err = float(np.max(np.abs(q_from_v(true_game, J) - q_from_v(true_game, J_star))))
    return PolicyScore(q_err, float(np.max(np.abs(J - J_star))))


def model_q_error(model: EmpiricalModel, policy, true_game: GameModel, reference=None) -> float:
    """``||Qhat^{mu,nu} - Q*||``: the pair's Q on the learned model against the true ``Q*``."""
    J_star = solve_equilibrium(true_game) if reference is None else np.asarray(reference, dtype=float)
    Jhat = exact_policy_value(model.induced, policy)
    return float(np.max(np.abs(q_from_v(model.induced, Jhat) - q_from_v(true_game, J_star))))


def q_error_floor(alpha: float, eps_opt: float) -> float:
    """Planning-error term ``5 alpha eps_opt / (1 - alpha)`` of the sample bound."""
    return 5.0 * alpha * eps_opt / (1.0 - alpha)


@dataclass(frozen=True)
class SampleBoundReport:
    n_required: int
    c: float
    alpha: float
    eps: float
    delta: float
    num_states: int
    num_max_actions: int
    num_min_actions: int
    c_ops: float | None = None
    alpha_tilde: float | None = None
    note: str = "valid only for linear turn-based games"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def sample_bound(
    alpha: float,
    eps: float,
    delta: float,
    sizes: tuple[int, int, int],
    c: float = 1.0,
    m=None,
    H: int | None = None,
    eps_opt: float | None = None,
    d: int | None = None,
    r: int | None = None,
    a_max: int | None = None,
) -> SampleBoundReport:
    """Per-tuple sample count (natural log, ceiling) and, if all planning inputs are given, the op count."""
    if not 0.0 < alpha < 1.0:
        raise ParameterOutOfRange(f"discount {alpha!r} not in (0, 1)")
    ceiling = 1.0 / math.sqrt(1.0 - alpha)
    if not 0.0 < eps <= ceiling:
        raise ParameterOutOfRange(f"eps={eps!r} must lie in (0, {ceiling:.6g}]")
    if not 0.0 < delta < 1.0:
        raise ParameterOutOfRange(f"delta={delta!r} must lie in (0, 1)")
    if not c > 0:
        raise ParameterOutOfRange("c must be positive")
    S, U, V = (int(x) for x in sizes)
    if min(S, U, V) < 1:
        raise ParameterOutOfRange("sizes must be positive")
    log_term = math.log(c * S * U * V / ((1.0 - alpha) ** 2 * delta))
    n = max(1, math.ceil(c * alpha * log_term / ((1.0 - alpha) ** 3 * eps ** 2)))
    c_ops = alpha_tilde = None
    planning = (m, H, eps_opt, d, r, a_max)
    if all(x is not None for x in planning):
        alpha_tilde = lookahead_pi_rate(alpha, m, H)
        if not alpha_tilde < 1.0:
            raise ParameterOutOfRange(f"rate {alpha_tilde:.6g} >= 1: computation bound undefined")
        if not eps_opt > 0:
            raise ParameterOutOfRange("eps_opt must be positive")
        # no iterations are needed once eps_opt exceeds 1/(1-alpha)
        rounds = max(0.0, math.log(1.0 / (eps_opt * (1.0 - alpha)))) / math.log(1.0 / alpha_tilde)
        per_round = d * (2 * r + 1) + d ** 3 / 3 + r * a_max ** 2 * d
        c_ops = c * m * H * rounds * per_round
    elif any(x is not None for x in planning):
        raise ParameterOutOfRange("computation bound needs m, H, eps_opt, d, r and a_max together")
    return SampleBoundReport(n, float(c), alpha, eps, delta, S, U, V, c_ops, alpha_tilde)


def implied_eps(alpha: float, N: int, delta: float, sizes, c: float = 1.0) -> float:
    """Smallest eps whose sample requirement is met by N (may exceed the eps ceiling)."""
    S, U, V = sizes
    log_term = math.log(c * S * U * V / ((1.0 - alpha) ** 2 * delta))
    return math.sqrt(c * alpha * log_term / ((1.0 - alpha) ** 3 * N))


def rl_experiment(
    game: GameModel,
    Ns,
    m=3,
    H: int | None = None,
    eps_opt: float = 1e-6,
    seed: int = 0,
    c: float = 1.0,
    delta: float = 0.1,
    timing: bool = True,
) -> dict:
    """Learn, plan and score for each N; the sampling seed for N is ``[seed, N]``.

    Returns a JSON-ready report.
    """
    H = min_lookahead(game.discount, m) if H is None else H
    J_star = solve_equilibrium(game)
    sizes = (game.num_states, int(game.n_max.max()), int(game.n_min.max()))
    runs = []
    for N in Ns:
        t0 = time.perf_counter()
        emp = generative_sample(game, int(N), np.random.default_rng([seed, int(N)]))
        plan = plan_on_model(emp, m, H, eps_opt)
        score = evaluate_learned_policy(game, plan.policy, J_star)
        eps = implied_eps(game.discount, int(N), delta, sizes, c)
        entry = {
            "N": int(N),
            "seed": [seed, int(N)],
            "q_error": score.q_error,
            "v_error": score.v_error,
            "model_q_error": model_q_error(emp, plan.policy, game, J_star),
            "plan_iterations": plan.iterations,
            "plan_certificate": plan.certificate,
            "implied_eps": eps,
            "predicted_q_bound": 2.0 * eps / 3.0 + q_error_floor(game.discount, eps_opt),
        }
        if timing:
            entry["wall_ms"] = (time.perf_counter() - t0) * 1e3
        runs.append(entry)
    bound = sample_bound(game.discount, min(0.1, 1.0 / math.sqrt(1.0 - game.discount)), delta, sizes, c)
    return {
        "inputs": {"num_states": game.num_states, "discount": game.discount, "m": m, "H": H,
                   "eps_opt": eps_opt, "delta": delta, "c": c},
        "seed": seed,
        "runs": runs,
        "bound_report": bound.to_dict(),
    }


__all__ = [
    "EmpiricalModel",
    "PlanResult",
    "PolicyScore",
    "SampleBoundReport",
    "generative_sample",
    "plan_on_model",
    "evaluate_learned_policy",
    "model_q_error",
    "q_error_floor",
    "sample_bound",
    "implied_eps",
    "rl_experiment",
]
