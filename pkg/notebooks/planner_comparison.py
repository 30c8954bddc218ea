"""
Planner comparison on a random game
===================================

Value iteration, lookahead policy iteration and Hoffman-Karp on one seeded
game, with their iteration counts, operator work and observed contraction.
Run as a script or cell by cell in an editor that understands ``# %%``.
"""

# %%
import numpy as np

from mgpi import INFINITE, PlannerConfig, random_game
from mgpi.planners import (
    check_assumption1,
    generalized_pi,
    hoffman_karp,
    min_lookahead,
    solve_equilibrium,
    value_iteration,
)

game = random_game(0, 15, (3, 3), sparsity=0.3, discount=0.8)
J = solve_equilibrium(game)
print(f"{game.num_states} states, {game.num_triples} joint actions, discount {game.discount}")

# %%
# The lookahead depth must be large enough for the rollout to help.  The
# smallest admissible depth grows as the discount approaches one.
for m in (0, 1, 3, INFINITE):
    H = min_lookahead(game.discount, m)
    rep = check_assumption1(game.discount, m, H)
    print(f"m={m}: H={H}, predicted rate {rep.kappa:.3f}")

# %%
runs = {
    "value iteration": value_iteration(game, PlannerConfig(stop_tol=1e-10, max_iters=10_000), J)[-1],
    "lookahead PI m=3": generalized_pi(game, PlannerConfig(m=3, H=min_lookahead(0.8, 3), stop_tol=1e-10), J)[-1],
    "lookahead PI m=inf": generalized_pi(
        game, PlannerConfig(m=INFINITE, H=min_lookahead(0.8, INFINITE), stop_tol=1e-10), J)[-1],
    "Hoffman-Karp": hoffman_karp(game, PlannerConfig(stop_tol=1e-10), J)[-1],
}
for name, trace in runs.items():
    c = trace.counter
    ratios = [r.ratio for r in trace.records[1:] if r.ratio is not None and r.sup_error > 1e-9]
    rate = f"{np.median(ratios):.3f}" if ratios else "-"
    print(f"{name:20s} iters={trace.iterations:4d} backups={c.operator_applications:6d} "
          f"matrix games={c.matrix_games:6d} median ratio={rate}")

# %%
# Lookahead PI needs far fewer outer iterations, but each one solves H rounds
# of matrix games, so the work moves from iterations into the lookahead.
