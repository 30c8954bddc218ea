"""
When naive policy iteration cycles
==================================

Alternating a greedy policy pair with its exact evaluation converges for
single-player games but can cycle for two players.  This script searches small
seeded games, shows one cycling instance and checks that lookahead PI solves it.
"""

# %%
import numpy as np

from mgpi import INFINITE, PlannerConfig
from mgpi.planners import (
    NaiveOutcome,
    generalized_pi,
    min_lookahead,
    naive_pi,
    search_cycling,
    search_game,
    solve_equilibrium,
)

instances, tally = search_cycling(2000)
print("outcomes over 2000 games:", tally)
print("cycling seeds:", [inst["seed"] for inst in instances])

# %%
game = search_game(instances[0]["seed"])
trace, outcome = naive_pi(game, PlannerConfig(m=INFINITE, max_iters=200, stop_tol=1e-9))
assert outcome is NaiveOutcome.CYCLING
print(f"{game.num_states} states, discount {game.discount}")
print("Bellman residual per iteration:", np.round(trace.residuals, 6))

# %%
# The greedy pair recurs, so the evaluated value recurs as well and the
# residual never shrinks.  Lookahead with enough depth breaks the loop.
J = solve_equilibrium(game)
H = min_lookahead(game.discount, INFINITE)
V, _, gtrace = generalized_pi(game, PlannerConfig(m=INFINITE, H=H, stop_tol=1e-10), J)
print(f"lookahead PI with H={H}: {gtrace.iterations} iterations, error {np.max(np.abs(V - J)):.1e}")
