"""Linear Markov games: planning in the space of feature weights.

In a linear game ``g(s,u,v) = phi(s,u,v) . theta`` and
``P(.|s,u,v) = eta @ phi(s,u,v)``, so for any value vector V the one-step
matrix ``A_{V,s}(u,v)`` equals ``phi(s,u,v) . beta`` with
``beta = theta + alpha * eta^T V``.  A backup of V therefore maps ``beta`` to a
new ``beta'`` that is recovered exactly by least squares over an anchor set of
triples whose features span R^d; only the states reachable from the anchors
ever need a matrix game.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ParameterOutOfRange, RankDeficient
from .game import INFINITE, GameModel, StochasticPolicyPair, validate_game
from .linear_fa import RANK_TOL
from .matrix_game import solve_matrix_game
from .trace import ConvergenceTrace, OpCounter

LINEAR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearGameModel:
    """Feature-linear game; ``features[i]`` is phi of the base game's flat triple i."""

    features: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    anchors: tuple
    base: GameModel

    def __post_init__(self):
        feats = np.array(self.features, dtype=float)
        theta = np.array(self.theta, dtype=float)
        eta = np.array(self.eta, dtype=float)
        base = self.base
        d = theta.size
        if feats.shape != (base.num_triples, d):
            raise DimensionMismatch(f"features must be {base.num_triples} x {d}")
        if eta.shape != (base.num_states, d):
            raise DimensionMismatch(f"eta must be {base.num_states} x {d}")
        if not np.allclose(feats @ theta, base.reward, rtol=0, atol=LINEAR_TOL):
            raise ValueError("rewards are not linear in the features")
        P_lin = feats @ eta.T
        if not np.allclose(P_lin, base.transition_matrix.toarray(), rtol=0, atol=LINEAR_TOL):
            raise ValueError("transitions are not linear in the features")
        anchors = tuple(int(a) for a in self.anchors)
        if not anchors or not all(0 <= a < base.num_triples for a in anchors):
            raise ValueError("anchors must be flat triple indices of the base game")
        FD = feats[list(anchors)]
        if np.linalg.matrix_rank(FD.T @ FD, tol=RANK_TOL) < d:
            raise RankDeficient("anchor features do not span R^d")
        for name, arr in (("features", feats), ("theta", theta), ("eta", eta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "anchors", anchors)

    @property
    def d(self) -> int:
        return self.theta.size

    @property
    def discount(self) -> float:
        return self.base.discount

    def beta_of(self, V) -> np.ndarray:
        """Weights parameterizing ``A_{V,s}``: ``theta + alpha * eta^T V``."""
        return self.theta + self.discount * (self.eta.T @ np.asarray(V, dtype=float))

    def reach_sum(self) -> int:
        sizes = self.base.reach_sizes()
        return int(sum(sizes[i] for i in self.anchors))

    def to_dict(self) -> dict:
        b = self.base
        return {
            "d": self.d,
            "discount": b.discount,
            "features": [[s, u, v, self.features[i].tolist()] for i, (s, u, v) in enumerate(b.triples())],
            "theta": self.theta.tolist(),
            "eta": self.eta.tolist(),
            "anchors": [list(_triple_of(b, i)) for i in self.anchors],
        }


def _triple_of(game: GameModel, i: int) -> tuple[int, int, int]:
    s = int(np.searchsorted(game.offsets, i, side="right") - 1)
    r = i - int(game.offsets[s])
    return s, r // int(game.n_min[s]), r % int(game.n_min[s])


def greedy_anchors(features: np.ndarray) -> tuple:
    """Scan triples in order, keeping each one that raises the feature rank."""
    d = features.shape[1]
    chosen: list[int] = []
    rank = 0
    for i, f in enumerate(features):
        r = np.linalg.matrix_rank(features[chosen + [i]], tol=RANK_TOL)
        if r > rank:
            chosen.append(i)
            rank = r
            if rank == d:
                break
    if rank < d:
        raise RankDeficient("features of all triples do not span R^d")
    return tuple(chosen)


def linear_game_from_weights(features, theta, eta, discount, actions_max, actions_min, anchors=None):
    """Induce the tabular game from (phi, theta, eta) and wrap it."""
    features = np.asarray(features, dtype=float)
    theta = np.asarray(theta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    n = eta.shape[0]
    raw = {"num_states": n, "discount": discount, "actions_max": list(actions_max),
           "actions_min": list(actions_min), "rewards": [], "transitions": []}
    i = 0
    for s in range(n):
        for u in range(actions_max[s]):
            for v in range(actions_min[s]):
                g = float(features[i] @ theta)
                if -1e-12 < g < 0.0 or 1.0 < g < 1.0 + 1e-12:
                    g = min(max(g, 0.0), 1.0)  # rounding at the ends of [0, 1]
                raw["rewards"].append([s, u, v, g])
                p = eta @ features[i]
                for t in np.flatnonzero(np.abs(p) > 1e-15):
                    raw["transitions"].append([s, u, v, int(t), float(p[t])])
                i += 1
    base = validate_game(raw)
    if anchors is None:
        anchors = greedy_anchors(features)
    return LinearGameModel(features, theta, eta, tuple(anchors), base)


def random_linear_game(rng, num_states: int, d: int, max_actions=(2, 2), support: int = 3,
                       mix: int = 2, discount: float = 0.9, fixed_actions: bool = True) -> LinearGameModel:
    """Seeded exactly-linear game.

    ``eta`` has d latent successor distributions over ``support`` states each;
    every triple mixes ``mix`` of them with Dirichlet weights, so each triple
    reaches at most ``mix * support`` states.  Rewards use ``theta ~ U[0,1]^d``.
    """
    rng = np.random.default_rng(rng)
    eta = np.zeros((num_states, d))
    for j in range(d):
        sup = rng.choice(num_states, size=min(support, num_states), replace=False)
        p = rng.dirichlet(np.ones(sup.size))
        eta[sup, j] = p / p.sum()
    theta = rng.random(d)
    a_max, a_min = max_actions
    n_max = [a_max if fixed_actions else int(rng.integers(1, a_max + 1)) for _ in range(num_states)]
    n_min = [a_min if fixed_actions else int(rng.integers(1, a_min + 1)) for _ in range(num_states)]
    rows = []
    for s in range(num_states):
        for _ in range(n_max[s] * n_min[s]):
            f = np.zeros(d)
            idx = rng.choice(d, size=min(mix, d), replace=False)
            w = rng.dirichlet(np.ones(idx.size))
            f[idx] = w / w.sum()
            rows.append(f)
    return linear_game_from_weights(np.array(rows), theta, eta, discount, n_max, n_min)


def one_hot_linear_game(game: GameModel) -> LinearGameModel:
    """Identity embedding of a tabular game: one feature per triple."""
    n = game.num_triples
    return LinearGameModel(np.eye(n), game.reward.copy(), game.transition_matrix.toarray().T,
                           tuple(range(n)), game)


def load_linear_game(path, discount: float | None = None) -> LinearGameModel:
    with open(path) as fh:
        raw = json.load(fh)
    return linear_game_from_dict(raw, discount)


def linear_game_from_dict(raw: dict, discount: float | None = None) -> LinearGameModel:
    """Parse the linear-model JSON layout.

    The file may carry a ``discount`` field; otherwise it must be passed in.
    """
    d = raw["d"]
    alpha = raw.get("discount", discount)
    if alpha is None:
        raise ValueError("linear model file has no discount and none was given")
    eta = np.asarray(raw["eta"], dtype=float)
    n = eta.shape[0]
    entries = sorted((int(s), int(u), int(v), f) for s, u, v, f in raw["features"])
    n_max = [0] * n
    n_min = [0] * n
    for s, u, v, _ in entries:
        n_max[s] = max(n_max[s], u + 1)
        n_min[s] = max(n_min[s], v + 1)
    if sum(a * b for a, b in zip(n_max, n_min)) != len(entries):
        raise ValueError("features must list every (s, u, v) triple exactly once")
    feats = np.array([f for *_, f in entries], dtype=float)
    if feats.shape[1] != d:
        raise DimensionMismatch(f"feature vectors must have length {d}")
    offsets = np.concatenate([[0], np.cumsum(np.multiply(n_max, n_min))])
    anchors = [int(offsets[s] + u * n_min[s] + v) for s, u, v in raw["anchors"]]
    return linear_game_from_weights(feats, raw["theta"], eta, alpha, n_max, n_min, anchors)


def assemble_local_matrix(lg: LinearGameModel, beta, s: int) -> np.ndarray:
    """``A(u, v) = phi(s,u,v) . beta`` for state s."""
    b = lg.base
    lo, hi = b.offsets[s], b.offsets[s + 1]
    return (lg.features[lo:hi] @ np.asarray(beta, dtype=float)).reshape(b.n_max[s], b.n_min[s])


def _local_strategy(policy, s):
    if isinstance(policy, StochasticPolicyPair):
        return policy.mu[s], policy.nu[s]
    return policy[s]


def beta_backup(lg: LinearGameModel, beta, mode="bellman", counter: OpCounter | None = None) -> np.ndarray:
    """Weights of the backed-up value, fitted at the anchors.

    ``mode`` is ``"bellman"`` (matrix-game value at every reachable state) or a
    policy: a :class:`StochasticPolicyPair` or a mapping ``s -> (mu, nu)``
    covering the states reachable from the anchors.
    """
    b = lg.base
    beta = np.asarray(beta, dtype=float)
    targets = np.empty(len(lg.anchors))
    for k, i in enumerate(lg.anchors):
        lo, hi = b.trans_indptr[i], b.trans_indptr[i + 1]
        acc = 0.0
        for t, p in zip(b.trans_succ[lo:hi], b.trans_prob[lo:hi]):
            A = assemble_local_matrix(lg, beta, t)
            if isinstance(mode, str):
                if mode != "bellman":
                    raise ValueError(f"unknown backup mode {mode!r}")
                val = solve_matrix_game(A).value
                if counter is not None:
                    counter.matrix_games += 1
            else:
                mu, nu = _local_strategy(mode, t)
                val = float(mu @ A @ nu)
            acc += p * val
        targets[k] = b.reward[i] + b.discount * acc
    if counter is not None:
        if isinstance(mode, str):
            counter.bellman_applications += 1
        else:
            counter.policy_applications += 1
    FD = lg.features[list(lg.anchors)]
    return np.linalg.solve(FD.T @ FD, FD.T @ targets)


def extract_policy(lg: LinearGameModel, beta, counter: OpCounter | None = None) -> dict:
    """Greedy strategies at every state reachable from an anchor."""
    b = lg.base
    out = {}
    for i in lg.anchors:
        for t in b.trans_succ[b.trans_indptr[i]:b.trans_indptr[i + 1]]:
            sol = solve_matrix_game(assemble_local_matrix(lg, beta, t))
            if counter is not None:
                counter.matrix_games += 1
            out[int(t)] = (sol.row_strategy, sol.col_strategy)
    return out


def induced_values(lg: LinearGameModel, beta) -> np.ndarray:
    """Per-state matrix-game value of the local matrices, i.e. ``(TV)(s)``."""
    return np.array([solve_matrix_game(assemble_local_matrix(lg, beta, s)).value
                     for s in range(lg.base.num_states)])


def linear_generalized_pi(lg: LinearGameModel, beta0, m: int, H: int, K: int, reference=None):
    """Generalized PI carried out on weights.

    Each iteration does ``H - 1`` Bellman-mode backups, extracts the greedy
    strategies of the resulting matrices at the reachable states (the H-th
    round of matrix games), then ``m`` policy-mode backups.  Returns
    ``(betas, trace)``; the trace logs ``induced_values`` of each iterate (that
    is ``T V_k``) against ``reference`` and counts only weight-space work.
    """
    if m == INFINITE or not isinstance(m, (int, np.integer)) or m < 0:
        raise ValueError("weight-space rollouts need a finite m >= 0")
    if not isinstance(H, (int, np.integer)) or H < 1:
        raise ValueError("H must be a positive integer")
    trace = ConvergenceTrace(reference=None if reference is None else np.asarray(reference, dtype=float))
    beta = np.asarray(beta0, dtype=float).copy()
    betas = [beta]
    W = induced_values(lg, beta)
    for k in range(K):
        b = beta
        for _ in range(H - 1):
            b = beta_backup(lg, b, "bellman", trace.counter)
        policy = extract_policy(lg, b, trace.counter)
        for _ in range(m):
            b = beta_backup(lg, b, policy, trace.counter)
        beta = b
        betas.append(beta)
        W_next = induced_values(lg, beta)
        trace.record(k, W, float(np.max(np.abs(W_next - W))))
        W = W_next
    trace.record(K, W, 0.0 if K == 0 else trace.records[-1].bellman_residual)
    trace.termination = "completed"
    trace.final_value = W
    return betas, trace


@dataclass(frozen=True)
class CostReport:
    """Per-iteration operation counts of the weight-space planner.

    ``total_per_iteration`` sums the three arithmetic parts; ``matrix_game_count``
    counts LP solves and is reported separately.  ``lsq_ops`` floors d^3/3 and is
    an upper-bound style estimate.
    """

    backup_ops: int
    lsq_ops: int
    assembly_ops: int
    matrix_game_count: int
    total_per_iteration: int
    backup_ops_per_anchor: int


def _positive_int(name, x, allow_zero=False):
    if not isinstance(x, (int, np.integer)) or isinstance(x, bool) or x < (0 if allow_zero else 1):
        raise ParameterOutOfRange(f"{name}={x!r} must be a {'nonnegative' if allow_zero else 'positive'} integer")


def cost_model(d: int, r: int, a_max: int, anchor_count: int, reach_sum: int, m: int, H: int) -> CostReport:
    """Operation counts for one weight-space iteration.

    Per backup: ``d(2r+1)`` per anchor plus ``floor(d^3/3)`` for the fit; there
    are ``H - 1 + m`` backups.  Matrix games: ``H * reach_sum``, each assembled
    with ``a_max^2 * d`` multiply-adds.
    """
    for name, x in (("d", d), ("r", r), ("a_max", a_max), ("anchor_count", anchor_count),
                    ("reach_sum", reach_sum), ("H", H)):
        _positive_int(name, x)
    _positive_int("m", m, allow_zero=True)
    backups = H - 1 + m
    per_anchor = d * (2 * r + 1)
    backup_ops = backups * anchor_count * per_anchor
    lsq_ops = backups * (d ** 3 // 3)
    games = H * reach_sum
    assembly = games * a_max * a_max * d
    return CostReport(backup_ops, lsq_ops, assembly, games, backup_ops + lsq_ops + assembly, per_anchor)


def planning_bracket(d: int, r: int, a_max: int) -> float:
    """``d(2r+1) + d^3/3 + r a_max^2 d``: per-step cost factor in the sample bound."""
    return d * (2 * r + 1) + d ** 3 / 3 + r * a_max ** 2 * d


__all__ = [
    "LinearGameModel",
    "CostReport",
    "assemble_local_matrix",
    "beta_backup",
    "extract_policy",
    "induced_values",
    "linear_generalized_pi",
    "cost_model",
    "planning_bracket",
    "greedy_anchors",
    "random_linear_game",
    "one_hot_linear_game",
    "linear_game_from_weights",
    "linear_game_from_dict",
    "load_linear_game",
]
