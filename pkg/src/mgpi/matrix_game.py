"""Two-player zero-sum matrix games solved exactly by a small dense simplex.

The row player maximizes ``x^T A y``.  After shifting the payoff so every entry
is at least 1, the column player's problem becomes

    maximize 1^T z   subject to  B z <= 1,  z >= 0

whose optimum ``w`` gives the game value ``1/w`` (minus the shift) and whose dual
prices give the row strategy.  The slack basis is feasible, so no phase one is
needed.  Pivoting follows Bland's rule, which makes the returned vertex a
deterministic function of the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalFailure

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    duality_gap: float = 0.0
    pivots: int = 0


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"payoff must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix has non-finite entries")
    return A


def _pure(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def solve_matrix_game(A) -> MatrixGameSolution:
    """Value and optimal mixed strategies of ``max_x min_y x^T A y``."""
    A = as_matrix(A)
    m, n = A.shape

    # single-row / single-column games are a plain scan (turn-based states)
    if m == 1:
        j = int(np.argmin(A[0]))
        return MatrixGameSolution(float(A[0, j]), np.ones(1), _pure(n, j))
    if n == 1:
        i = int(np.argmax(A[:, 0]))
        return MatrixGameSolution(float(A[i, 0]), _pure(m, i), np.ones(1))

    # pure saddle point: maximin of rows equals minimax of columns
    row_min = A.min(axis=1)
    col_max = A.max(axis=0)
    i = int(np.argmax(row_min))
    j = int(np.argmin(col_max))
    if row_min[i] == col_max[j]:
        return MatrixGameSolution(float(A[i, j]), _pure(m, i), _pure(n, j))

    return _simplex_solve(A)


def _simplex_solve(A: np.ndarray) -> MatrixGameSolution:
    m, n = A.shape
    shift = 1.0 - A.min()
    B = A + shift

    # tableau rows: m constraints, then the objective row (reduced costs of -1^T z)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = B
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = list(range(n, n + m))

    cap = 50 * (m + n)
    pivots = 0
    while True:
        cost = T[m, :-1]
        entering = np.flatnonzero(cost < -PIVOT_TOL)
        if entering.size == 0:
            break
        if pivots >= cap:
            raise NumericalFailure(f"simplex did not terminate within {cap} pivots")
        col = int(entering[0])  # Bland: lowest index with negative reduced cost
        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            raise NumericalFailure("unbounded matrix-game LP; payoff shift failed")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        # Bland: among tied rows leave the basic variable with the lowest index
        row = int(min(ties, key=lambda r: basis[r]))
        T[row] /= T[row, col]
        for r in range(m + 1):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        basis[row] = col
        pivots += 1

    z = np.zeros(n + m)
    for r, b in enumerate(basis):
        z[b] = T[r, -1]
    y = np.clip(z[:n], 0.0, None)
    x = np.clip(T[m, n:n + m], 0.0, None)
    primal, dual = y.sum(), x.sum()
    if primal <= 0 or dual <= 0:
        raise NumericalFailure("degenerate simplex result")
    col_strategy = y / primal
    row_strategy = x / dual
    value = 1.0 / T[m, -1] - shift
    gap = abs(1.0 / primal - 1.0 / dual)
    return MatrixGameSolution(float(value), row_strategy, col_strategy, float(gap), pivots)


def best_response_value(A, row_strategy) -> tuple[float, int]:
    """Minimizer's best pure reply to a fixed row mixture (lowest index on ties)."""
    A = as_matrix(A)
    x = np.asarray(row_strategy, dtype=float)
    if x.shape != (A.shape[0],):
        raise DimensionMismatch(f"row strategy of length {x.size} for {A.shape[0]} rows")
    payoffs = x @ A
    j = int(np.argmin(payoffs))
    return float(payoffs[j]), j


def security_levels(A, sol: MatrixGameSolution) -> tuple[float, float]:
    """``(min_j x^T A e_j, max_i e_i^T A y)`` for the returned strategies."""
    A = as_matrix(A)
    return float((sol.row_strategy @ A).min()), float((A @ sol.col_strategy).max())
