"""
Why polarities alternate
========================

Replace the random reference chain by its conditional mean,
``z -> E(Z_n | Z_(n-1) = z)``, and iterate. At the default parameters the
map has one unstable fixed point and an attracting 2-cycle. Lengthen the
refractory period and the fixed point becomes stable.
"""

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eventpixel import dynamics as dy, event_stream as es

short = es.ModelParams(5.0, 0.002, 0.96, 0.94)
long_ = es.ModelParams(5.0, 0.39, 0.96, 0.94)

for name, p, z0 in (("rho = 0.002", short, 0.0), ("rho = 0.39", long_, 0.2)):
    fps = dy.find_fixed_points(p)
    tr = dy.iterate_conditionals(p, z0, 50)
    print(name, [(round(f.location, 4), f.stable) for f in fps], tr.classification)

# %%
# Cobweb diagrams. Each vertical step lands on the curve, each horizontal
# step on the diagonal.
fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
for ax, (p, z0, title) in zip(axes, ((short, 0.0, "rho = 0.002"), (long_, 0.2, "rho = 0.39"))):
    z = np.linspace(-1, 1, 400)
    ax.plot(z, es.conditional_expected_z(p, z), "k")
    ax.plot(z, z, "k:", lw=0.8)
    segs = dy.lemeray_trace(p, z0, 50)
    xs = [segs[0].x0] + [s.x1 for s in segs]
    ys = [segs[0].y0] + [s.y1 for s in segs]
    ax.plot(xs, ys, lw=0.8)
    ax.set_title(title)
    ax.set_xlabel("z_(n-1)")
axes[0].set_ylabel("E(Z_n | z_(n-1))")
fig.tight_layout()
fig.savefig("cobweb.png", dpi=120)

# %%
# The reference level where the next polarity is a coin flip, checked
# against the ISI maximum and the root of the conditional mean.
cp = dy.critical_point(short)
print(f"z* = {cp.z_star:.4f}, ISI argmax {cp.isi_argmax:.4f}, "
      f"E[Z] root {cp.expectation_root:.4f}")
