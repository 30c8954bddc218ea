"""Reference computations that share no code with the package."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def support_enumeration_value(A, tol=1e-9):
    """Value of a matrix game from square supports (Shapley-Snow basic solutions).

    For each pair of equal-size supports solve the indifference equations for
    both players and accept the first pair that is feasible and mutually best.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    for k in range(1, min(m, n) + 1):
        for I in itertools.combinations(range(m), k):
            for J in itertools.combinations(range(n), k):
                B = A[np.ix_(I, J)]
                # row player: x^T B = v 1, sum x = 1
                M = np.zeros((k + 1, k + 1))
                M[:k, :k] = B.T
                M[:k, k] = -1.0
                M[k, :k] = 1.0
                rhs = np.zeros(k + 1)
                rhs[k] = 1.0
                try:
                    sol_x = np.linalg.solve(M, rhs)
                except np.linalg.LinAlgError:
                    continue
                M[:k, :k] = B
                try:
                    sol_y = np.linalg.solve(M, rhs)
                except np.linalg.LinAlgError:
                    continue
                x, v = sol_x[:k], sol_x[k]
                y = sol_y[:k]
                if np.any(x < -tol) or np.any(y < -tol) or abs(sol_y[k] - v) > 1e-7:
                    continue
                xf = np.zeros(m)
                xf[list(I)] = x
                yf = np.zeros(n)
                yf[list(J)] = y
                if np.all(xf @ A >= v - 1e-7) and np.all(A @ yf <= v + 1e-7):
                    return float(v)
    raise AssertionError("no equilibrium found by support enumeration")


def linprog_value(A):
    """Matrix-game value by scipy's HiGHS: max v s.t. x^T A >= v, x in simplex."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A.T, np.ones((n, 1))])
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * m + [(None, None)], method="highs")
    assert res.success
    return float(-res.fun)


def dense_blocks(game):
    """Per-state reward blocks and transition tensors from the flat arrays."""
    P = game.transition_matrix.toarray()
    rewards, trans = [], []
    for s in range(game.num_states):
        lo, hi = game.offsets[s], game.offsets[s + 1]
        shape = (game.n_max[s], game.n_min[s])
        rewards.append(game.reward[lo:hi].reshape(shape))
        trans.append(P[lo:hi].reshape(shape + (game.num_states,)))
    return rewards, trans


def howard_pi(game, max_iters=1000):
    """Howard policy iteration for a game whose minimizer has one action everywhere.

    Returns ``(J, u_choice)``.
    """
    assert np.all(game.n_min == 1)
    rewards, trans = dense_blocks(game)
    S, a = game.num_states, game.discount
    u = np.zeros(S, dtype=int)
    for _ in range(max_iters):
        P = np.array([trans[s][u[s], 0] for s in range(S)])
        g = np.array([rewards[s][u[s], 0] for s in range(S)])
        J = np.linalg.solve(np.eye(S) - a * P, g)
        new = u.copy()
        for s in range(S):
            q = rewards[s][:, 0] + a * trans[s][:, 0] @ J
            if q.max() > q[u[s]] + 1e-12:
                new[s] = int(np.argmax(q))
        if np.array_equal(new, u):
            return J, u
        u = new
    raise AssertionError("Howard PI did not terminate")


def brute_force_tabular_value(game, tol=1e-13):
    """Shapley iteration with the LP oracle per state (slow, independent)."""
    rewards, trans = dense_blocks(game)
    V = np.zeros(game.num_states)
    while True:
        W = np.array([linprog_value(rewards[s] + game.discount * trans[s] @ V) for s in range(game.num_states)])
        if np.max(np.abs(W - V)) < tol:
            return W
        V = W
