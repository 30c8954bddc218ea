"""Zero-sum discounted Markov games, policy pairs and exact policy evaluation.

A game has a finite state set, per-state action sets for the maximizer (``U(s)``)
and the minimizer (``V(s)``), a sparse transition kernel, rewards in [0, 1] and a
discount factor in (0, 1).

Internally every valid ``(s, u, v)`` triple gets a flat index
``offsets[s] + u * n_min[s] + v``; rewards and transition rows are stored per
flat triple, so the whole one-step backup of a value vector is a single sparse
matrix-vector product.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, GameValidationError, SingularSystem

PROB_TOL = 1e-12

#: Rollout depth meaning "evaluate the policy exactly" (fixed point of T_{mu,nu}).
INFINITE = math.inf


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GameModel:
    """Validated, immutable game.  Build it with :func:`validate_game`."""

    num_states: int
    n_max: np.ndarray
    n_min: np.ndarray
    discount: float
    offsets: np.ndarray
    reward: np.ndarray
    trans_indptr: np.ndarray
    trans_succ: np.ndarray
    trans_prob: np.ndarray

    @property
    def num_triples(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def transition_matrix(self) -> sp.csr_matrix:
        """Sparse ``num_triples x num_states`` matrix of P(s'|s,u,v)."""
        return sp.csr_matrix(
            (self.trans_prob, self.trans_succ, self.trans_indptr),
            shape=(self.num_triples, self.num_states),
        )

    @cached_property
    def triple_state(self) -> np.ndarray:
        return _frozen(np.repeat(np.arange(self.num_states), np.diff(self.offsets)), int)

    def index(self, s: int, u: int, v: int) -> int:
        if not (0 <= s < self.num_states and 0 <= u < self.n_max[s] and 0 <= v < self.n_min[s]):
            raise DimensionMismatch(f"no triple ({s}, {u}, {v})")
        return int(self.offsets[s] + u * self.n_min[s] + v)

    def triples(self):
        """Iterate over all valid ``(s, u, v)`` in flat-index order."""
        for s in range(self.num_states):
            for u in range(int(self.n_max[s])):
                for v in range(int(self.n_min[s])):
                    yield s, u, v

    def transition(self, s: int, u: int, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Successor states and their probabilities for ``(s, u, v)``."""
        i = self.index(s, u, v)
        lo, hi = self.trans_indptr[i], self.trans_indptr[i + 1]
        return self.trans_succ[lo:hi], self.trans_prob[lo:hi]

    def reachable(self, s: int, u: int, v: int) -> np.ndarray:
        return self.transition(s, u, v)[0]

    def reward_of(self, s: int, u: int, v: int) -> float:
        return float(self.reward[self.index(s, u, v)])

    def local(self, flat: np.ndarray, s: int) -> np.ndarray:
        """View of a per-triple vector as the ``|U(s)| x |V(s)|`` block of state s."""
        return flat[self.offsets[s]:self.offsets[s + 1]].reshape(self.n_max[s], self.n_min[s])

    def reach_sizes(self) -> np.ndarray:
        return np.diff(self.trans_indptr)

    def with_transitions(self, indptr, succ, prob) -> "GameModel":
        """Same game with a different transition kernel (validated)."""
        raw = self.to_dict()
        raw["transitions"] = [
            [s, u, v, int(succ[k]), float(prob[k])]
            for i, (s, u, v) in enumerate(self.triples())
            for k in range(indptr[i], indptr[i + 1])
        ]
        return validate_game(raw)

    def to_dict(self) -> dict:
        rewards, transitions = [], []
        for i, (s, u, v) in enumerate(self.triples()):
            rewards.append([s, u, v, float(self.reward[i])])
            for k in range(self.trans_indptr[i], self.trans_indptr[i + 1]):
                transitions.append([s, u, v, int(self.trans_succ[k]), float(self.trans_prob[k])])
        return {
            "num_states": self.num_states,
            "discount": self.discount,
            "actions_max": [int(a) for a in self.n_max],
            "actions_min": [int(a) for a in self.n_min],
            "rewards": rewards,
            "transitions": transitions,
        }


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def validate_game(raw: Mapping) -> GameModel:
    """Check a parsed game description and build a :class:`GameModel`.

    Every violated invariant is collected before raising, so a single
    :class:`GameValidationError` lists all problems in the input.
    """
    bad: list[tuple[str, str]] = []
    for key in ("num_states", "discount", "actions_max", "actions_min", "rewards", "transitions"):
        if key not in raw:
            bad.append(("Malformed", f"missing field {key!r}"))
    if bad:
        raise GameValidationError(bad)

    n = raw["num_states"]
    if not _is_int(n) or n < 1:
        raise GameValidationError([("Malformed", f"num_states must be a positive integer, got {n!r}")])
    n = int(n)

    alpha = raw["discount"]
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool) or not (0.0 < alpha < 1.0):
        bad.append(("DiscountOutOfRange", f"discount must lie in (0, 1), got {alpha!r}"))

    counts = {}
    for name in ("actions_max", "actions_min"):
        arr = raw[name]
        if not isinstance(arr, Sequence) or len(arr) != n or not all(_is_int(a) and a >= 1 for a in arr):
            bad.append(("Malformed", f"{name} must list a positive integer per state"))
        else:
            counts[name] = np.array(arr, dtype=int)
    if len(counts) < 2:
        raise GameValidationError(bad)

    n_max, n_min = counts["actions_max"], counts["actions_min"]
    offsets = np.concatenate([[0], np.cumsum(n_max * n_min)])
    num_triples = int(offsets[-1])

    def flat(s, u, v):
        if not all(_is_int(x) for x in (s, u, v)):
            return None
        if not (0 <= s < n and 0 <= u < n_max[s] and 0 <= v < n_min[s]):
            return None
        return int(offsets[s] + u * n_min[s] + v)

    reward = np.full(num_triples, np.nan)
    for entry in raw["rewards"]:
        if not isinstance(entry, Sequence) or len(entry) != 4:
            bad.append(("Malformed", f"reward entry {entry!r} is not [s, u, v, g]"))
            continue
        s, u, v, g = entry
        i = flat(s, u, v)
        if i is None:
            bad.append(("UnknownTriple", f"reward for undefined triple ({s}, {u}, {v})"))
            continue
        if not np.isnan(reward[i]):
            bad.append(("DuplicateEntry", f"reward for ({s}, {u}, {v}) given twice"))
            continue
        if not isinstance(g, (int, float)) or isinstance(g, bool) or not math.isfinite(g) or not (0.0 <= g <= 1.0):
            bad.append(("RewardOutOfRange", f"reward {g!r} at ({s}, {u}, {v}) outside [0, 1]"))
            reward[i] = 0.0
            continue
        reward[i] = float(g)

    rows: list[dict[int, float]] = [dict() for _ in range(num_triples)]
    for entry in raw["transitions"]:
        if not isinstance(entry, Sequence) or len(entry) != 5:
            bad.append(("Malformed", f"transition entry {entry!r} is not [s, u, v, s', p]"))
            continue
        s, u, v, t, p = entry
        i = flat(s, u, v)
        if i is None:
            bad.append(("UnknownTriple", f"transition from undefined triple ({s}, {u}, {v})"))
            continue
        if not _is_int(t) or not (0 <= t < n):
            bad.append(("DanglingSuccessor", f"successor {t!r} of ({s}, {u}, {v}) outside [0, {n})"))
            continue
        if t in rows[i]:
            bad.append(("DuplicateEntry", f"transition ({s}, {u}, {v}) -> {t} given twice"))
            continue
        if not isinstance(p, (int, float)) or isinstance(p, bool) or not math.isfinite(p) or p < 0:
            bad.append(("NonstochasticRow", f"probability {p!r} for ({s}, {u}, {v}) -> {t} is not >= 0"))
            continue
        rows[i][int(t)] = float(p)

    indptr = np.zeros(num_triples + 1, dtype=int)
    succ, prob = [], []
    triple_names = [(s, u, v) for s in range(n) for u in range(n_max[s]) for v in range(n_min[s])]
    for i, (s, u, v) in enumerate(triple_names):
        if np.isnan(reward[i]):
            bad.append(("MissingTriple", f"no reward for ({s}, {u}, {v})"))
        row = rows[i]
        if not row:
            bad.append(("MissingTriple", f"no transitions for ({s}, {u}, {v})"))
        elif abs(math.fsum(row.values()) - 1.0) > PROB_TOL:
            bad.append(("NonstochasticRow", f"transition row ({s}, {u}, {v}) sums to {math.fsum(row.values())!r}"))
        # the reachable set is the support: zero-probability entries are dropped
        for t in sorted(row):
            if row[t] > 0.0:
                succ.append(t)
                prob.append(row[t])
        indptr[i + 1] = len(succ)

    if bad:
        raise GameValidationError(bad)

    return GameModel(
        num_states=n,
        n_max=_frozen(n_max, int),
        n_min=_frozen(n_min, int),
        discount=float(alpha),
        offsets=_frozen(offsets, int),
        reward=_frozen(reward),
        trans_indptr=_frozen(indptr, int),
        trans_succ=_frozen(succ, int),
        trans_prob=_frozen(prob),
    )


def game_from_arrays(rewards, transitions, discount) -> GameModel:
    """Build a game from per-state dense blocks.

    ``rewards[s]`` has shape ``(|U(s)|, |V(s)|)`` and ``transitions[s]`` has shape
    ``(|U(s)|, |V(s)|, num_states)``.
    """
    n = len(rewards)
    raw = {
        "num_states": n,
        "discount": discount,
        "actions_max": [],
        "actions_min": [],
        "rewards": [],
        "transitions": [],
    }
    for s in range(n):
        g = np.asarray(rewards[s], dtype=float)
        P = np.asarray(transitions[s], dtype=float)
        if g.ndim != 2 or P.shape != g.shape + (n,):
            raise DimensionMismatch(f"state {s}: reward {g.shape} vs transition {P.shape}")
        raw["actions_max"].append(g.shape[0])
        raw["actions_min"].append(g.shape[1])
        for u in range(g.shape[0]):
            for v in range(g.shape[1]):
                raw["rewards"].append([s, u, v, float(g[u, v])])
                for t in np.flatnonzero(P[u, v]):
                    raw["transitions"].append([s, u, v, int(t), float(P[u, v, t])])
    return validate_game(raw)


def load_game(path) -> GameModel:
    with open(path) as fh:
        return validate_game(json.load(fh))


def save_game(game: GameModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(game.to_dict(), fh, indent=1)
        fh.write("\n")


def random_game(
    rng,
    num_states: int,
    max_actions: tuple[int, int] = (2, 2),
    sparsity: float = 0.5,
    discount: float = 0.9,
    fixed_actions: bool = False,
) -> GameModel:
    """Seeded random game.

    Each ``(s, u, v)`` reaches ``1 + round(sparsity * (num_states - 1))`` distinct
    successors drawn uniformly, with Dirichlet(1, ..., 1) probabilities; rewards
    are uniform on [0, 1].  Action counts are drawn uniformly from
    ``1..max_actions`` per state unless ``fixed_actions`` is set.
    """
    rng = np.random.default_rng(rng)
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError("sparsity must lie in [0, 1]")
    k = 1 + int(round(sparsity * (num_states - 1)))
    a_max, a_min = max_actions
    raw = {
        "num_states": num_states,
        "discount": discount,
        "actions_max": [],
        "actions_min": [],
        "rewards": [],
        "transitions": [],
    }
    for s in range(num_states):
        nu = a_max if fixed_actions else int(rng.integers(1, a_max + 1))
        nv = a_min if fixed_actions else int(rng.integers(1, a_min + 1))
        raw["actions_max"].append(nu)
        raw["actions_min"].append(nv)
        for u in range(nu):
            for v in range(nv):
                raw["rewards"].append([s, u, v, float(rng.random())])
                support = np.sort(rng.choice(num_states, size=k, replace=False))
                p = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
                # renormalize in exact arithmetic order so rows sum to 1 within 1e-12
                p = p / math.fsum(p)
                for t, q in zip(support, p):
                    raw["transitions"].append([s, u, v, int(t), float(q)])
    return validate_game(raw)


@dataclass(frozen=True, eq=False)
class StochasticPolicyPair:
    """Per-state mixed strategies ``mu[s]`` over U(s) and ``nu[s]`` over V(s)."""

    mu: tuple
    nu: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(_frozen(m) for m in self.mu))
        object.__setattr__(self, "nu", tuple(_frozen(m) for m in self.nu))
        if len(self.mu) != len(self.nu):
            raise DimensionMismatch("mu and nu cover different numbers of states")
        for dist in self.mu + self.nu:
            if dist.ndim != 1 or dist.size == 0 or np.any(dist < 0) or abs(dist.sum() - 1.0) > PROB_TOL:
                raise ValueError(f"not a probability vector: {dist}")

    @classmethod
    def deterministic(cls, game: GameModel, u_choice, v_choice) -> "StochasticPolicyPair":
        mu = [np.eye(game.n_max[s])[u_choice[s]] for s in range(game.num_states)]
        nu = [np.eye(game.n_min[s])[v_choice[s]] for s in range(game.num_states)]
        return cls(tuple(mu), tuple(nu))

    @classmethod
    def uniform(cls, game: GameModel) -> "StochasticPolicyPair":
        mu = [np.full(a, 1.0 / a) for a in game.n_max]
        nu = [np.full(a, 1.0 / a) for a in game.n_min]
        return cls(tuple(mu), tuple(nu))

    @classmethod
    def random(cls, game: GameModel, rng) -> "StochasticPolicyPair":
        rng = np.random.default_rng(rng)

        def draw(a):
            p = rng.dirichlet(np.ones(a))
            return p / p.sum()

        return cls(tuple(draw(a) for a in game.n_max), tuple(draw(a) for a in game.n_min))

    def check(self, game: GameModel) -> None:
        if len(self.mu) != game.num_states:
            raise DimensionMismatch(f"policy covers {len(self.mu)} states, game has {game.num_states}")
        for s in range(game.num_states):
            if self.mu[s].size != game.n_max[s] or self.nu[s].size != game.n_min[s]:
                raise DimensionMismatch(f"policy at state {s} does not match action sets")

    def joint_weights(self, game: GameModel) -> np.ndarray:
        """Flat per-triple weights ``mu(s)(u) * nu(s)(v)``."""
        self.check(game)
        return np.concatenate([np.outer(self.mu[s], self.nu[s]).ravel() for s in range(game.num_states)])

    def key(self, decimals: int = 9) -> tuple:
        """Hashable rounded form, used to detect revisited policies."""
        return tuple(tuple(np.round(d, decimals)) for d in self.mu + self.nu)


def _aggregate(game: GameModel, weights: np.ndarray) -> sp.csr_matrix:
    """``|S| x num_triples`` matrix that averages triples of a state with ``weights``."""
    return sp.csr_matrix(
        (weights, np.arange(game.num_triples), game.offsets),
        shape=(game.num_states, game.num_triples),
    )


def policy_transition(game: GameModel, pol: StochasticPolicyPair) -> np.ndarray:
    """Dense ``P_{mu,nu}`` with rows ``sum_{u,v} mu(u) nu(v) P(.|s,u,v)``."""
    W = _aggregate(game, pol.joint_weights(game))
    return (W @ game.transition_matrix).toarray()


def policy_reward(game: GameModel, pol: StochasticPolicyPair) -> np.ndarray:
    w = pol.joint_weights(game)
    return np.add.reduceat(w * game.reward, game.offsets[:-1])


def exact_policy_value(game: GameModel, pol: StochasticPolicyPair) -> np.ndarray:
    """``J^{mu,nu}`` by solving ``(I - alpha P_{mu,nu}) J = g_{mu,nu}`` directly."""
    P = policy_transition(game, pol)
    g = policy_reward(game, pol)
    A = np.eye(game.num_states) - game.discount * P
    try:
        J = np.linalg.solve(A, g)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(J)):
        raise SingularSystem("policy evaluation produced non-finite values")
    return J


def check_value(game: GameModel, V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape != (game.num_states,):
        raise DimensionMismatch(f"value vector has shape {V.shape}, expected ({game.num_states},)")
    return V


def q_from_v(game: GameModel, V) -> np.ndarray:
    """Flat ``Q(s,u,v) = g(s,u,v) + alpha * sum_{s'} P(s'|s,u,v) V(s')``.

    Entry ``game.index(s, u, v)`` equals ``A_{V,s}(u, v)``; use
    :meth:`GameModel.local` for the per-state matrix.
    """
    V = check_value(game, V)
    return game.reward + game.discount * (game.transition_matrix @ V)
