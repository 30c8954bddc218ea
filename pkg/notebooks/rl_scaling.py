"""
Learning from a generative model
================================

Estimate the transition kernel from N samples per joint action, plan on the
estimate and score the learned policy pair on the true game.  The error of the
learned pair on the true game falls faster than N^{-1/2}, while the error of
the learned model's own Q values follows the N^{-1/2} statistical rate.
"""

# %%
import numpy as np

from mgpi import random_game
from mgpi.model_rl import rl_experiment, sample_bound

Ns = [100, 1000, 10_000]
q_err, model_err = [], []
for seed in range(10):
    game = random_game([909, seed], 5, (3, 3), 0.6, 0.6, fixed_actions=True)
    rep = rl_experiment(game, Ns, m=3, eps_opt=1e-8, seed=seed, timing=False)
    q_err.append([r["q_error"] for r in rep["runs"]])
    model_err.append([r["model_q_error"] for r in rep["runs"]])

# %%
for name, errs in (("policy on true game", q_err), ("learned-model Q", model_err)):
    med = np.median(errs, axis=0)
    slope = np.polyfit(np.log10(Ns), np.log10(med), 1)[0]
    shown = " ".join(f"{x:.2e}" for x in med)
    print(f"{name:20s} medians {shown}  slope {slope:.2f}")

# %%
# The worst-case sample bound with constant c=1 is far from what these games need.
rep = sample_bound(0.6, 0.1, 0.1, (5, 3, 3))
print(f"samples per joint action for eps=0.1, delta=0.1: {rep.n_required}")
