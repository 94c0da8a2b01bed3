"""
Exit times of the standardized OU process
=========================================

The filtered pixel voltage is an Ornstein-Uhlenbeck process. An event fires
when it leaves the band between the two thresholds, so everything rests on
the joint law of the exit time and the exit side.
"""

# %%
# Closed forms first. The side probabilities are ratios of ``erfi`` values;
# the mean exit time comes from a scaled integral of ``erfcx`` that does not
# cancel when the band sits far from the origin.
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eventpixel import ou_exit

p = ou_exit.ExitProblem(omega=2.0, lower=-0.5, upper=1.0, start=0.0)
p_lo, p_up = ou_exit.exit_side_probs(p)
print(f"P(lower) = {p_lo:.4f}, P(upper) = {p_up:.4f}")
print(f"E tau = {ou_exit.expected_exit_time(p):.4f} s")

# %%
# The backward equations give the distribution in time. ``g2`` and ``g3``
# are the probabilities of having left through each side by time ``t``;
# their long-time limits are the closed-form side probabilities.
sol = ou_exit.solve_exit_pdes(p)
g1, g2, g3 = sol.at_start()
t = sol.grid_t
plt.figure(figsize=(6, 3.5))
plt.plot(t, g2, label="lower side")
plt.plot(t, g3, label="upper side")
plt.axhline(p_lo, ls=":", c="C0")
plt.axhline(p_up, ls=":", c="C1")
plt.xlim(0, 5)
plt.xlabel("t (s)")
plt.ylabel("P(exit by t)")
plt.legend()
plt.tight_layout()
plt.savefig("exit_cdfs.png", dpi=120)

# %%
# Two samplers draw (tau, side). The path-free one inverts the PDE tables;
# the oracle steps the exact OU transition with a Brownian-bridge crossing
# test between grid points. They should agree.
rng = np.random.default_rng(0)
pf = ou_exit.sample_exit_pathfree(p, sol, rng, size=50_000)
orc = ou_exit.sample_exit_path_oracle(p, ou_exit.default_oracle_dt(p), rng, size=20_000)
print(f"path-free mean {pf.times.mean():.4f}, oracle mean {orc.times.mean():.4f}")

bins = np.linspace(0, 4, 81)
plt.figure(figsize=(6, 3.5))
for s, name in ((pf, "path-free"), (orc, "oracle")):
    plt.hist(s.times[s.lower], bins, density=True, histtype="step",
             label=f"{name}, lower side")
plt.xlabel("tau (s)")
plt.legend()
plt.tight_layout()
plt.savefig("exit_time_histograms.png", dpi=120)
