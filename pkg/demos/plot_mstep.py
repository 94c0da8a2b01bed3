"""
Multi-step transition densities
===============================

Start many chains at the same reference level and watch the density of
``Z_m`` spread out. Early steps jump from one side of ``z*`` to the other;
by a couple of hundred steps the memory of the start is gone.
"""

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eventpixel import dynamics as dy, event_stream as es

p = es.ModelParams(5.0, 0.002, 0.96, 0.94)
ms = [1, 2, 3, 4, 200]
curves = es.m_step_density_kde(p, -0.5, ms, 50_000, np.random.default_rng(3))

# %%
# The one-step curve has a closed form; the rest are kernel estimates.
zs = dy.critical_point(p).z_star
plt.figure(figsize=(6, 3.5))
for m in ms:
    grid, dens = curves[m]
    plt.plot(grid, dens, label=f"m = {m}")
g1 = curves[1][0]
plt.plot(g1, es.one_step_transition_density(p, -0.5, g1), "k:", label="m = 1, exact")
plt.axvline(zs, c="gray", lw=0.8)
plt.xlabel("z")
plt.ylabel("density")
plt.legend()
plt.tight_layout()
plt.savefig("mstep.png", dpi=120)
