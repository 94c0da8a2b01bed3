"""
A synthetic event stream
========================

Simulate a pixel watching a static scene. Noise alone makes it fire, and the
reference reset after each event makes consecutive polarities alternate far
more often than a coin would.
"""

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from eventpixel import analysis, event_stream as es

p = es.ModelParams(omega=5.0, rho=0.002, theta_minus_tilde=0.96, theta_plus_tilde=0.94)
s = es.simulate_event_stream(p, 0.0, 20_000, np.random.default_rng(1), seed=1)
print(analysis.summarize(s).to_text())

# %%
# Inter-spike intervals split by the polarity transition. Opposite-polarity
# pairs come much sooner than same-polarity ones: after an on event the
# reference sits just above the voltage, so an off event is close.
h = analysis.isi_histograms(s)
centers = np.sqrt(h.edges[:-1] * h.edges[1:])
plt.figure(figsize=(6, 3.5))
for cls in analysis.TRANSITION_CLASSES:
    plt.semilogx(centers, h.counts[cls], drawstyle="steps-mid", label=cls)
plt.xlabel("ISI (s)")
plt.ylabel("count")
plt.legend()
plt.tight_layout()
plt.savefig("isi_histograms.png", dpi=120)

# %%
# The stream's empirical conditionals against the closed-form curves,
# binned by the reference level before each event.
bc = analysis.binned_conditionals(s, bins=30)
z = np.linspace(bc.edges[0], bc.edges[-1], 400)
fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
ax[0].plot(z, es.conditional_event_probs(p, z)[1])
ax[0].plot(bc.z_mean, bc.p_on, ".")
ax[0].set_xlabel("z")
ax[0].set_ylabel("P(on | z)")
ax[1].plot(z, es.conditional_expected_isi(p, z))
ax[1].plot(bc.z_mean, bc.isi_mean, ".")
ax[1].set_xlabel("z")
ax[1].set_ylabel("E(ISI | z) (s)")
fig.tight_layout()
fig.savefig("conditionals.png", dpi=120)
