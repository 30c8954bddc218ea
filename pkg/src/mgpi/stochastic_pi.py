"""Policy iteration with sampled m-step returns and stochastic-approximation averaging.

Each iteration computes the lookahead policy of ``Phi theta_k`` exactly, draws
start states from an exploring-starts distribution, simulates one m-step
trajectory per start under the lookahead policy and bootstraps with the exact
``T^{H-1}(Phi theta_k)``.  The weights fitted to the visited states by the
Moore-Penrose inverse are blended into ``theta`` with stepsize ``gamma_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bellman import _check_depth, lookahead, rate_power
from .errors import DimensionMismatch, ParameterOutOfRange
from .game import INFINITE, GameModel, StochasticPolicyPair, check_value
from .linear_fa import StateFeatureScheme
from .planners import solve_equilibrium
from .trace import ConvergenceTrace

# samples per vectorized chunk in sample_returns
CHUNK = 1 << 18


@dataclass(frozen=True)
class StepSchedule:
    """Stepsizes ``gamma_k``: either ``c / (k+1)**p`` or an explicit sequence."""

    kind: str
    c: float = 1.0
    p: float = 1.0
    values: tuple = ()

    @classmethod
    def harmonic(cls, c: float = 1.0, p: float = 1.0) -> "StepSchedule":
        """Robbins-Monro conditions hold exactly when ``1/2 < p <= 1``."""
        if not c > 0:
            raise ParameterOutOfRange(f"stepsize scale c={c!r} must be positive")
        if not 0.5 < p <= 1.0:
            raise ParameterOutOfRange(f"exponent p={p!r} must lie in (1/2, 1]")
        return cls("harmonic", float(c), float(p))

    @classmethod
    def explicit(cls, values) -> "StepSchedule":
        """A finite user sequence; the summability conditions cannot be checked."""
        vals = tuple(float(x) for x in values)
        if not vals or not all(0.0 < x <= 1.0 for x in vals):
            raise ParameterOutOfRange("explicit stepsizes must lie in (0, 1]")
        return cls("explicit", values=vals)

    def gamma(self, k: int) -> float:
        if self.kind == "harmonic":
            return min(1.0, self.c / (k + 1) ** self.p)
        if k >= len(self.values):
            raise ParameterOutOfRange(f"explicit schedule has no stepsize for iteration {k}")
        return self.values[k]


@dataclass(frozen=True)
class TrajectoryBatch:
    """Returns of one iteration; ``returns`` is zero off the visited set."""

    visited: np.ndarray
    returns: np.ndarray
    counts: np.ndarray


class _Sampler:
    """Inverse-CDF sampling of joint actions and successors, vectorized over starts.

    Both draws use a key array ``row + cumulative probability within the row`` so
    one ``searchsorted`` handles every row at once.
    """

    def __init__(self, game: GameModel, pol: StochasticPolicyPair):
        self.game = game
        w = pol.joint_weights(game)
        row = game.triple_state
        self.action_key = row + _row_cumsum(w, game.offsets)
        P = game.transition_matrix
        tri = np.repeat(np.arange(game.num_triples), np.diff(P.indptr))
        self.succ_key = tri + _row_cumsum(P.data, P.indptr)
        self.succ = P.indices

    def step(self, states: np.ndarray, rng: np.random.Generator):
        g = self.game
        t = np.searchsorted(self.action_key, states + rng.random(states.size), side="right")
        t = np.clip(t, g.offsets[states], g.offsets[states + 1] - 1)
        P = g.transition_matrix
        j = np.searchsorted(self.succ_key, t + rng.random(t.size), side="right")
        j = np.clip(j, P.indptr[t], P.indptr[t + 1] - 1)
        return t, self.succ[j]


def _row_cumsum(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    c = np.cumsum(values)
    start = np.repeat(np.concatenate(([0.0], c[indptr[1:-1] - 1])), np.diff(indptr))
    return c - start


def sample_returns(game: GameModel, pol: StochasticPolicyPair, backed_value, m: int, starts, rng) -> np.ndarray:
    """One discounted m-step return per entry of ``starts``.

    Each return is ``sum_{i<m} alpha^i g(s_i,u_i,v_i) + alpha^m backed_value(s_m)``
    along a trajectory simulated under ``pol``.
    """
    _check_depth(m)
    if m == INFINITE:
        raise ParameterOutOfRange("sampled returns need a finite rollout depth")
    backed = check_value(game, backed_value)
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size and (starts.min() < 0 or starts.max() >= game.num_states):
        raise DimensionMismatch("start states out of range")
    rng = np.random.default_rng(rng)
    sampler = _Sampler(game, pol) if m > 0 else None
    out = np.empty(starts.size)
    for lo in range(0, starts.size, CHUNK):
        s = starts[lo:lo + CHUNK]
        total = np.zeros(s.size)
        scale = 1.0
        for _ in range(int(m)):
            t, s = sampler.step(s, rng)
            total += scale * game.reward[t]
            scale *= game.discount
        out[lo:lo + CHUNK] = total + scale * backed[s]
    return out


def sample_return(game: GameModel, pol: StochasticPolicyPair, backed_value, m: int, start_state: int, rng) -> float:
    """Single-trajectory version of :func:`sample_returns`."""
    return float(sample_returns(game, pol, backed_value, m, [start_state], rng)[0])


def draw_batch(game, pol, backed_value, m, starts, rng) -> TrajectoryBatch:
    """Simulate from each start and average the returns of repeated starts."""
    starts = np.asarray(starts, dtype=np.int64)
    G = sample_returns(game, pol, backed_value, m, starts, rng)
    counts = np.bincount(starts, minlength=game.num_states)
    sums = np.bincount(starts, weights=G, minlength=game.num_states)
    visited = np.flatnonzero(counts)
    returns = np.zeros(game.num_states)
    returns[visited] = sums[visited] / counts[visited]
    return TrajectoryBatch(visited, returns, counts)


def fit_visited(scheme: StateFeatureScheme, batch: TrajectoryBatch) -> np.ndarray:
    """Minimum-norm least squares over the visited rows (Moore-Penrose solution)."""
    rows = scheme.phi[batch.visited]
    return np.linalg.pinv(rows) @ batch.returns[batch.visited]


@dataclass(frozen=True)
class Assumption2Report:
    satisfied: bool
    lhs: float


def check_assumption2(alpha: float, m, H: int, delta_fv_prime: float) -> Assumption2Report:
    """``d' a^{m+H-1}(1+a)/(1-a) + 2 a^{H-1}/(1-a) < 1``."""
    if not 0.0 < alpha < 1.0:
        raise ParameterOutOfRange(f"discount {alpha!r} not in (0, 1)")
    if m != INFINITE and (not isinstance(m, (int, np.integer)) or isinstance(m, bool) or m < 0):
        raise ParameterOutOfRange(f"m={m!r} must be a nonnegative integer or INFINITE")
    if not isinstance(H, (int, np.integer)) or isinstance(H, bool) or H < 1:
        raise ParameterOutOfRange(f"H={H!r} must be a positive integer")
    if not (delta_fv_prime >= 0 and math.isfinite(delta_fv_prime)):
        raise ParameterOutOfRange("delta_fv_prime must be finite and nonnegative")
    a = alpha ** (H - 1)
    lhs = delta_fv_prime * rate_power(alpha, m) * a * (1 + alpha) / (1 - alpha) + 2 * a / (1 - alpha)
    return Assumption2Report(lhs < 1.0, lhs)


def sampled_rate(alpha: float, m, H: int, delta_fv_prime: float) -> float:
    """Contraction factor in the limsup bound of the sampled scheme."""
    a = alpha ** (H - 1)
    return a + (1 + alpha) * (1 + rate_power(alpha, m) * delta_fv_prime) * a / (1 - alpha)


def exploring_starts(num_states: int, p=None) -> np.ndarray:
    """Validated start distribution; uniform by default."""
    if p is None:
        return np.full(num_states, 1.0 / num_states)
    p = np.asarray(p, dtype=float)
    if p.shape != (num_states,):
        raise DimensionMismatch("start distribution must have one entry per state")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ParameterOutOfRange("exploring starts need p(s) > 0 for every s, summing to 1")
    return p


@dataclass
class StochasticRun:
    thetas: list
    trace: ConvergenceTrace
    last_batch: TrajectoryBatch | None


def stochastic_pi(
    game: GameModel,
    scheme: StateFeatureScheme,
    theta0,
    m: int,
    H: int,
    schedule: StepSchedule,
    K: int,
    rng,
    start_dist=None,
    starts_per_iter: int | str | None = None,
    reference=None,
) -> StochasticRun:
    """Run K noisy iterations.

    ``starts_per_iter`` is the number of start draws from ``start_dist`` per
    iteration (default ``|S|``); ``"all"`` starts once from every state.
    States missed by an iteration get weight from the minimum-norm fit only, so
    with partial visitation the averaged weights are shrunk toward the span of
    the visited rows.
    """
    if scheme.phi.shape[0] != game.num_states:
        raise DimensionMismatch("feature matrix rows do not match the number of states")
    theta = np.asarray(theta0, dtype=float).copy()
    if theta.shape != (scheme.d,):
        raise DimensionMismatch(f"theta must have length {scheme.d}")
    S = game.num_states
    p = exploring_starts(S, start_dist)
    rng = np.random.default_rng(rng)
    n_starts = S if starts_per_iter is None else starts_per_iter
    J_star = solve_equilibrium(game) if reference is None else np.asarray(reference, dtype=float)
    trace = ConvergenceTrace(reference=J_star)
    thetas = [theta.copy()]
    batch = None
    for k in range(K):
        V = scheme.phi @ theta
        la = lookahead(game, V, H, trace.counter)
        trace.record(k, V, float(np.max(np.abs(la.one_step - V))))
        starts = np.arange(S) if n_starts == "all" else rng.choice(S, size=int(n_starts), p=p)
        batch = draw_batch(game, la.policy, la.backed_value, m, starts, rng)
        trace.counter.policy_applications += int(m)
        gamma = schedule.gamma(k)
        theta = (1.0 - gamma) * theta + gamma * fit_visited(scheme, batch)
        thetas.append(theta.copy())
    V = scheme.phi @ theta
    la = lookahead(game, V, 1, trace.counter)
    trace.record(K, V, float(np.max(np.abs(la.one_step - V))))
    trace.termination = "completed"
    trace.final_value = V
    return StochasticRun(thetas, trace, batch)


__all__ = [
    "StepSchedule",
    "TrajectoryBatch",
    "Assumption2Report",
    "StochasticRun",
    "sample_return",
    "sample_returns",
    "draw_batch",
    "fit_visited",
    "check_assumption2",
    "sampled_rate",
    "exploring_starts",
    "stochastic_pi",
]
