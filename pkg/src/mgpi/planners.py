"""Planning algorithms for zero-sum Markov games.

* :func:`value_iteration` -- Shapley's ``V <- TV``.
* :func:`generalized_pi` -- lookahead policy iteration ``V <- T_{mu,nu}^m T^{H-1} V``.
* :func:`naive_pi` -- greedy (H = 1) policy iteration, which may cycle.
* :func:`hoffman_karp` -- greedy maximizer, minimizer's MDP solved each round.

All planners stop on the Bellman residual ``||TV_k - V_k||_inf <= stop_tol``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .bellman import apply_bellman, apply_min_operator, composite_step, lookahead, rate_power, rollout
from .errors import AssumptionViolated, MaxItersExceeded, ParameterOutOfRange
from .game import INFINITE, GameModel, check_value, random_game, validate_game
from .trace import ConvergenceTrace

HK_INNER_TOL = 1e-12


@dataclass(frozen=True)
class PlannerConfig:
    m: int | float = 1
    H: int = 1
    max_iters: int = 1000
    stop_tol: float = 1e-10
    v0: np.ndarray | None = None
    strict: bool = False

    def __post_init__(self):
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if not isinstance(self.H, (int, np.integer)) or self.H < 1:
            raise ValueError("H must be a positive integer")
        if self.m != INFINITE and (not isinstance(self.m, (int, np.integer)) or self.m < 0):
            raise ValueError("m must be a nonnegative integer or INFINITE")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    def initial(self, game: GameModel) -> np.ndarray:
        if self.v0 is None:
            return np.zeros(game.num_states)
        return check_value(game, self.v0).copy()


@dataclass(frozen=True)
class RateReport:
    kappa: float
    assumption1_satisfied: bool
    assumption1_lhs: float


def _check_rate_params(alpha, m, H):
    if not 0.0 < alpha < 1.0:
        raise ParameterOutOfRange(f"discount {alpha!r} not in (0, 1)")
    if m != INFINITE and (not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 0):
        raise ParameterOutOfRange(f"m={m!r} must be a nonnegative integer or INFINITE")
    if not isinstance(H, (int, np.integer)) or isinstance(H, bool) or H < 1:
        raise ParameterOutOfRange(f"H={H!r} must be a positive integer")


def lookahead_pi_rate(alpha: float, m, H: int) -> float:
    """Contraction factor of ``T_{m,H}`` toward the equilibrium value."""
    a = alpha ** (H - 1)
    return a + (1.0 + rate_power(alpha, m)) * a / (1.0 - alpha) * (1.0 + alpha)


def check_assumption1(alpha: float, m, H: int) -> RateReport:
    """Evaluate the lookahead condition and the convergence rate for ``(alpha, m, H)``.

    The condition uses the coefficient 2 while the rate uses ``1 + alpha``;
    both are reported as stated.
    """
    _check_rate_params(alpha, m, H)
    a = alpha ** (H - 1)
    lhs = a + 2.0 * (1.0 + rate_power(alpha, m)) * a / (1.0 - alpha)
    return RateReport(kappa=lookahead_pi_rate(alpha, m, H), assumption1_satisfied=lhs < 1.0, assumption1_lhs=lhs)


def min_lookahead(alpha: float, m) -> int:
    """Smallest H satisfying the lookahead condition for ``(alpha, m)``."""
    _check_rate_params(alpha, m, 1)
    H = 1
    while not check_assumption1(alpha, m, H).assumption1_satisfied:
        H += 1
    return H


def _residual(TV, V) -> float:
    return float(np.max(np.abs(TV - V)))


def _new_trace(reference) -> ConvergenceTrace:
    return ConvergenceTrace(reference=None if reference is None else np.asarray(reference, dtype=float))


def value_iteration(game: GameModel, config: PlannerConfig, reference=None):
    """Shapley value iteration.  Returns ``(V, trace)`` with ``||TV - V|| <= stop_tol``."""
    trace = _new_trace(reference)
    V = config.initial(game)
    for k in range(config.max_iters + 1):
        TV, greedy = apply_bellman(game, V, trace.counter)
        res = _residual(TV, V)
        trace.record(k, V, res)
        trace.final_value, trace.final_policy = V, greedy
        if res <= config.stop_tol:
            trace.termination = "converged"
            return V, trace
        if k == config.max_iters:
            break
        V = TV
    trace.termination = "max_iters"
    raise MaxItersExceeded(f"value iteration not converged after {config.max_iters} iterations", V, trace)


def generalized_pi(game: GameModel, config: PlannerConfig, reference=None):
    """Lookahead policy iteration.

    Each iteration computes the H-step lookahead of ``V_k``, takes the greedy
    pair at the last backup, and rolls it out ``m`` times from ``T^{H-1} V_k``.
    Returns ``(V, policy, trace)``; ``policy`` is the lookahead policy of the
    returned ``V``.
    """
    report = check_assumption1(game.discount, config.m, config.H)
    if config.strict and not report.assumption1_satisfied:
        raise AssumptionViolated(
            f"lookahead condition fails: lhs={report.assumption1_lhs:.6g} >= 1 for m={config.m}, H={config.H}"
        )
    trace = _new_trace(reference)
    V = config.initial(game)
    for k in range(config.max_iters + 1):
        la = lookahead(game, V, config.H, trace.counter)
        res = _residual(la.one_step, V)
        trace.record(k, V, res)
        trace.final_value, trace.final_policy = V, la.policy
        if res <= config.stop_tol:
            trace.termination = "converged"
            return V, la.policy, trace
        if k == config.max_iters:
            break
        V = rollout(game, la.policy, la.backed_value, config.m, trace.counter)
    trace.termination = "max_iters"
    raise MaxItersExceeded(f"generalized PI not converged after {config.max_iters} iterations", V, trace)


def generalized_pi_iterates(game: GameModel, V0, m, H: int, iterations: int) -> list[np.ndarray]:
    """The first ``iterations + 1`` iterates ``V_0, V_1, ...`` with no stopping rule."""
    V = np.asarray(V0, dtype=float).copy()
    out = [V]
    for _ in range(iterations):
        V, _ = composite_step(game, V, m, H)
        out.append(V)
    return out


class NaiveOutcome(enum.Enum):
    CONVERGED = "converged"
    CYCLING = "cycling"
    MAX_ITERS = "max_iters"


def naive_pi(game: GameModel, config: PlannerConfig, reference=None):
    """Pollatschek--Avi-Itzhak iteration: greedy pair, then an m-step rollout.

    ``config.H`` is ignored.  Cycling is declared when a greedy pair seen at an
    earlier iteration recurs without the residual having decreased since.
    Returns ``(trace, outcome)``; ``trace.final_value`` holds the last iterate.
    """
    trace = _new_trace(reference)
    V = config.initial(game)
    seen: dict[tuple, float] = {}
    for k in range(config.max_iters + 1):
        TV, greedy = apply_bellman(game, V, trace.counter)
        res = _residual(TV, V)
        trace.record(k, V, res)
        trace.final_value, trace.final_policy = V, greedy
        if res <= config.stop_tol:
            trace.termination = NaiveOutcome.CONVERGED.value
            return trace, NaiveOutcome.CONVERGED
        key = greedy.key()
        if key in seen and res >= seen[key]:
            trace.termination = NaiveOutcome.CYCLING.value
            return trace, NaiveOutcome.CYCLING
        seen[key] = res
        if k == config.max_iters:
            break
        V = rollout(game, greedy, V, config.m, trace.counter)
    trace.termination = NaiveOutcome.MAX_ITERS.value
    return trace, NaiveOutcome.MAX_ITERS


ARCHIVE_FORMAT = "mgpi-cycling-archive/1"


def search_game(seed: int) -> GameModel:
    """The seeded 2-3 state, 2x2 action game used by the cycling search."""
    rng = np.random.default_rng(seed)
    S = int(rng.integers(2, 4))
    return random_game(rng, S, (2, 2), float(rng.random()), float(rng.choice([0.5, 0.9, 0.99])))


def search_cycling(n_games: int, first_seed: int = 0, m=INFINITE, max_iters: int = 200, stop_tol: float = 1e-9):
    """Run naive PI on ``n_games`` seeded small games.

    Returns ``(instances, tally)``: archive entries for every non-converging game
    and a count per outcome.
    """
    config = PlannerConfig(m=m, max_iters=max_iters, stop_tol=stop_tol)
    tally = {o.value: 0 for o in NaiveOutcome}
    instances = []
    for seed in range(first_seed, first_seed + n_games):
        game = search_game(seed)
        trace, outcome = naive_pi(game, config)
        tally[outcome.value] += 1
        if outcome is not NaiveOutcome.CONVERGED:
            instances.append({
                "seed": seed,
                "outcome": outcome.value,
                "iterations": trace.iterations,
                "residuals": trace.residuals.tolist(),
                "game": game.to_dict(),
            })
    return instances, tally


def cycling_archive(instances, tally, m=INFINITE, max_iters: int = 200, stop_tol: float = 1e-9) -> dict:
    return {
        "format": ARCHIVE_FORMAT,
        "config": {"m": "inf" if m == INFINITE else int(m), "max_iters": max_iters, "stop_tol": stop_tol},
        "tally": tally,
        "instances": list(instances),
    }


def validate_cycling_archive(raw: dict) -> list[GameModel]:
    """Check the archive layout and that every stored game is valid and reproduces its outcome."""
    if raw.get("format") != ARCHIVE_FORMAT:
        raise ValueError(f"unknown archive format {raw.get('format')!r}")
    cfg = raw["config"]
    m = INFINITE if cfg["m"] == "inf" else int(cfg["m"])
    config = PlannerConfig(m=m, max_iters=int(cfg["max_iters"]), stop_tol=float(cfg["stop_tol"]))
    if sum(raw["tally"].values()) < len(raw["instances"]):
        raise ValueError("tally counts fewer games than archived instances")
    games = []
    for entry in raw["instances"]:
        game = validate_game(entry["game"])
        if search_game(int(entry["seed"])).to_dict() != entry["game"]:
            raise ValueError(f"seed {entry['seed']} does not regenerate the archived game")
        trace, outcome = naive_pi(game, config)
        if outcome.value != entry["outcome"] or trace.iterations != entry["iterations"]:
            raise ValueError(f"seed {entry['seed']} does not reproduce its archived outcome")
        games.append(game)
    return games


def write_cycling_archive(path, archive: dict) -> None:
    with open(path, "w") as fh:
        json.dump(archive, fh, indent=1)


def hoffman_karp(game: GameModel, config: PlannerConfig, reference=None, inner_max_iters: int = 1_000_000):
    """Greedy maximizer policy, then ``V <- J^mu`` by iterating ``T_mu`` to 1e-12.

    Returns ``(V, trace)``.
    """
    trace = _new_trace(reference)
    V = config.initial(game)
    for k in range(config.max_iters + 1):
        TV, greedy = apply_bellman(game, V, trace.counter)
        res = _residual(TV, V)
        trace.record(k, V, res)
        trace.final_value, trace.final_policy = V, greedy
        if res <= config.stop_tol:
            trace.termination = "converged"
            return V, trace
        if k == config.max_iters:
            break
        W = V
        for _ in range(inner_max_iters):
            W_next, _ = apply_min_operator(game, greedy.mu, W, trace.counter)
            done = _residual(W_next, W) <= HK_INNER_TOL
            W = W_next
            if done:
                break
        else:
            raise MaxItersExceeded("minimizer MDP did not converge", W, trace)
        V = W
    trace.termination = "max_iters"
    raise MaxItersExceeded(f"Hoffman-Karp not converged after {config.max_iters} iterations", V, trace)


def solve_equilibrium(game: GameModel, tol: float = 1e-12, max_iters: int = 1_000_000) -> np.ndarray:
    """High-precision ``J*`` by value iteration (reference for tests and reports)."""
    V, _ = value_iteration(game, PlannerConfig(stop_tol=tol, max_iters=max_iters))
    # one more backup tightens the error bound from tol/(1-a) to a*tol/(1-a)
    TV, _ = apply_bellman(game, V)
    return TV


def vi_error_bound(alpha: float, residual: float) -> float:
    """``||TV - J*|| <= alpha/(1-alpha) * ||TV - V||``."""
    return alpha * residual / (1.0 - alpha)


__all__ = [
    "PlannerConfig",
    "RateReport",
    "NaiveOutcome",
    "INFINITE",
    "lookahead_pi_rate",
    "check_assumption1",
    "min_lookahead",
    "value_iteration",
    "generalized_pi",
    "generalized_pi_iterates",
    "naive_pi",
    "search_game",
    "search_cycling",
    "cycling_archive",
    "validate_cycling_archive",
    "write_cycling_archive",
    "hoffman_karp",
    "solve_equilibrium",
    "vi_error_bound",
]
