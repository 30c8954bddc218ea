"""Least-squares function-approximation policy iteration with lookahead.

Values are represented as ``Phi @ theta`` with state features ``Phi`` (|S| x d).
Each iteration evaluates ``T_{m,H}(Phi theta_k)`` exactly at a fixed anchor set
``D`` and refits ``theta`` by least squares over the anchors, which is the same
as applying ``M = Phi (Phi_D^T Phi_D)^{-1} Phi_D^T P_D`` to the full target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bellman import apply_bellman, composite_step, rate_power
from .errors import AssumptionViolated, DimensionMismatch, RankDeficient
from .game import GameModel, exact_policy_value
from .planners import solve_equilibrium
from .trace import ConvergenceTrace

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateFeatureScheme:
    phi: np.ndarray
    anchors: tuple

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2:
            raise DimensionMismatch("phi must be a |S| x d matrix")
        anchors = tuple(int(a) for a in self.anchors)
        if len(set(anchors)) != len(anchors) or not all(0 <= a < phi.shape[0] for a in anchors):
            raise ValueError("anchors must be distinct state indices")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "anchors", anchors)

    @property
    def d(self) -> int:
        return self.phi.shape[1]

    @property
    def phi_anchor(self) -> np.ndarray:
        return self.phi[list(self.anchors)]

    @classmethod
    def tabular(cls, num_states: int) -> "StateFeatureScheme":
        return cls(np.eye(num_states), tuple(range(num_states)))

    def to_dict(self) -> dict:
        return {"d": self.d, "phi": self.phi.tolist(), "anchors": list(self.anchors)}

    @classmethod
    def from_dict(cls, raw: dict) -> "StateFeatureScheme":
        phi = np.asarray(raw["phi"], dtype=float)
        if phi.ndim != 2 or phi.shape[1] != raw["d"]:
            raise DimensionMismatch(f"feature rows must have length d={raw['d']}")
        return cls(phi, tuple(raw["anchors"]))


@dataclass(frozen=True, eq=False)
class ProjectionOperator:
    m_matrix: np.ndarray
    delta_fv: float
    gram: np.ndarray = field(repr=False)


def check_rank(phi_anchor: np.ndarray) -> None:
    n, d = phi_anchor.shape
    if n < d:
        raise RankDeficient(f"{n} anchors cannot determine {d} weights")
    sv = np.linalg.svd(phi_anchor, compute_uv=False)
    if sv.min() <= RANK_TOL:
        raise RankDeficient(f"anchor features have rank < {d} (smallest singular value {sv.min():.3g})")


def build_projection(scheme: StateFeatureScheme) -> ProjectionOperator:
    """Explicit ``M`` and ``delta_FV = ||M||_inf``."""
    PhiD = scheme.phi_anchor
    check_rank(PhiD)
    gram = PhiD.T @ PhiD
    S = scheme.phi.shape[0]
    select = np.zeros((len(scheme.anchors), S))
    select[np.arange(len(scheme.anchors)), list(scheme.anchors)] = 1.0
    M = scheme.phi @ np.linalg.solve(gram, PhiD.T @ select)
    return ProjectionOperator(M, float(np.abs(M).sum(axis=1).max()), gram)


def fit_anchors(scheme: StateFeatureScheme, targets) -> np.ndarray:
    """Least-squares weights from anchor targets via the normal equations."""
    PhiD = scheme.phi_anchor
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (len(scheme.anchors),):
        raise DimensionMismatch("one target per anchor expected")
    return np.linalg.solve(PhiD.T @ PhiD, PhiD.T @ targets)


def _step(game, scheme, theta, m, H, counter=None):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (scheme.d,):
        raise DimensionMismatch(f"theta must have length {scheme.d}")
    if scheme.phi.shape[0] != game.num_states:
        raise DimensionMismatch("feature matrix rows do not match the number of states")
    target, la = composite_step(game, scheme.phi @ theta, m, H, counter)
    return fit_anchors(scheme, target[list(scheme.anchors)]), la


def fa_pi_step(game: GameModel, scheme: StateFeatureScheme, proj, theta, m, H: int):
    """One iteration: returns ``(theta_next, lookahead_policy)``.

    ``proj`` is unused by the update itself (the fit goes through the normal
    equations); pass ``None`` to have the rank condition checked here.
    """
    if proj is None:
        check_rank(scheme.phi_anchor)
    theta_next, la = _step(game, scheme, theta, m, H)
    return theta_next, la.policy


def fa_kappa(alpha: float, m, H: int, delta_fv: float) -> float:
    a = alpha ** (H - 1)
    return a + (delta_fv * rate_power(alpha, m) * a + a) * (1.0 + alpha) / (1.0 - alpha)


def min_lookahead_fa(alpha: float, m, delta_fv: float, h_max: int = 10_000) -> int:
    """Smallest H with ``fa_kappa < 1``."""
    for H in range(1, h_max + 1):
        if fa_kappa(alpha, m, H, delta_fv) < 1.0:
            return H
    raise ValueError("no lookahead up to h_max makes the rate below 1")


def estimate_delta_app(game: GameModel, scheme, proj: ProjectionOperator, policies) -> float:
    """``max ||J^{mu,nu} - M J^{mu,nu}||_inf`` over the given policies.

    This is a lower estimate of the supremum over all iterates.
    """
    policies = list(policies)
    if not policies:
        raise ValueError("need at least one policy")
    worst = 0.0
    for pol in policies:
        J = exact_policy_value(game, pol)
        worst = max(worst, float(np.max(np.abs(J - proj.m_matrix @ J))))
    return worst


@dataclass(frozen=True)
class FaBoundReport:
    kappa_fa: float
    delta_fv: float
    delta_app_estimate: float
    asymptotic_bound: float | None

    def bound(self, k: int, initial_error: float) -> float:
        """Finite-time bound ``kappa^k e_0 + delta_app / (1 - kappa)``."""
        if self.asymptotic_bound is None:
            raise ValueError("bound undefined when kappa_fa >= 1")
        return self.kappa_fa ** k * initial_error + self.asymptotic_bound


@dataclass
class FaRun:
    thetas: list
    policies: list
    report: FaBoundReport
    trace: ConvergenceTrace


def fa_pi(
    game: GameModel,
    scheme: StateFeatureScheme,
    theta0,
    m,
    H: int,
    K: int,
    reference=None,
    extra_policies=(),
    strict: bool = False,
) -> FaRun:
    """Run K iterations and report the error bound.

    ``delta_app`` is estimated over every lookahead policy the run visited plus
    ``extra_policies``.  ``reference`` defaults to a high-precision ``J*``.
    """
    proj = build_projection(scheme)
    kappa = fa_kappa(game.discount, m, H, proj.delta_fv)
    if strict and not kappa < 1.0:
        raise AssumptionViolated(f"kappa_fa={kappa:.6g} >= 1")
    J_star = solve_equilibrium(game) if reference is None else np.asarray(reference, dtype=float)
    trace = ConvergenceTrace(reference=J_star)
    theta = np.asarray(theta0, dtype=float).copy()
    thetas, policies = [theta], []
    for k in range(K):
        V = scheme.phi @ theta
        theta, la = _step(game, scheme, theta, m, H, trace.counter)
        trace.record(k, V, float(np.max(np.abs(la.one_step - V))))
        policies.append(la.policy)
        thetas.append(theta)
    V = scheme.phi @ theta
    TV, _ = apply_bellman(game, V, trace.counter)
    trace.record(K, V, float(np.max(np.abs(TV - V))))
    trace.termination = "completed"
    trace.final_value = V
    pool = policies + list(extra_policies)
    delta_app = estimate_delta_app(game, scheme, proj, pool) if pool else 0.0
    bound = delta_app / (1.0 - kappa) if kappa < 1.0 else None
    return FaRun(thetas, policies, FaBoundReport(kappa, proj.delta_fv, delta_app, bound), trace)


def random_features(rng, num_states: int, d: int, n_anchors: int | None = None) -> StateFeatureScheme:
    """Gaussian features with a random full-rank anchor set (``n_anchors >= d``)."""
    rng = np.random.default_rng(rng)
    n_anchors = d if n_anchors is None else n_anchors
    while True:
        phi = rng.normal(size=(num_states, d))
        anchors = tuple(sorted(rng.choice(num_states, size=n_anchors, replace=False).tolist()))
        try:
            check_rank(phi[list(anchors)])
        except RankDeficient:
            continue
        return StateFeatureScheme(phi, anchors)


__all__ = [
    "StateFeatureScheme",
    "ProjectionOperator",
    "FaBoundReport",
    "FaRun",
    "build_projection",
    "fit_anchors",
    "fa_pi_step",
    "fa_pi",
    "fa_kappa",
    "min_lookahead_fa",
    "estimate_delta_app",
    "random_features",
]
