"""Photon-to-voltage front end and the low-pass filtered voltage process.

The post-amplifier voltage is ``V = b1 log(K/b2 + 1) + b3 + sigma Z`` with
``K ~ Poisson(xi1 L + xi2)``. For bright enough scenes ``V`` is close to
normal; :func:`asymptotic_params` gives that normal law. Feeding white
noise of that level through a first-order low-pass filter gives the OU
process ``dV = w (mu - V) dt + w sigma_V dW`` which :func:`simulate_ou_path`
samples exactly on a uniform grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "FrontEndParams",
    "GaussianVoltage",
    "NormalizedThresholds",
    "sample_post_amp_voltage",
    "asymptotic_params",
    "normalize",
    "simulate_standardized_ou_path",
    "simulate_ou_path",
]


@dataclass(frozen=True)
class FrontEndParams:
    """Amplifier, noise and illumination constants of a single pixel.

    ``beta1`` [V], ``beta2`` [e-], ``beta3`` [V] shape the log amplifier,
    ``sigma`` [V] is the Johnson noise level, ``xi1`` converts radiance to
    electrons, ``xi2`` is the dark signal in electrons and ``radiance`` is
    the scene radiance L.
    """

    beta1: float
    beta2: float
    beta3: float
    sigma: float
    xi1: float
    xi2: float
    radiance: float

    def __post_init__(self):
        for name in ("beta1", "beta2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("sigma", "xi1", "xi2", "radiance"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.rate > 0:
            raise ValueError("xi1 * radiance + xi2 must be > 0")

    @property
    def rate(self) -> float:
        """Poisson mean ``xi1 L + xi2`` of the collected electrons."""
        return self.xi1 * self.radiance + self.xi2


@dataclass(frozen=True)
class GaussianVoltage:
    mu_v: float
    sigma_v: float

    def __post_init__(self):
        if not self.sigma_v > 0:
            raise ValueError("sigma_v must be > 0")


@dataclass(frozen=True)
class NormalizedThresholds:
    theta_minus_tilde: float
    theta_plus_tilde: float

    def __post_init__(self):
        if not (self.theta_minus_tilde > 0 and self.theta_plus_tilde > 0):
            raise ValueError("normalized thresholds must be > 0")

    def __mul__(self, c: float) -> "NormalizedThresholds":
        return NormalizedThresholds(c * self.theta_minus_tilde, c * self.theta_plus_tilde)

    __rmul__ = __mul__


def sample_post_amp_voltage(p: FrontEndParams, rng: np.random.Generator, size=None):
    """Draw post-amplifier voltages.

    Poisson counts come from numpy's generator (inversion at small means,
    PTRS rejection at large ones).
    """
    k = rng.poisson(p.rate, size=size)
    z = rng.standard_normal(size=size)
    return p.beta1 * np.log1p(k / p.beta2) + p.beta3 + p.sigma * z


def asymptotic_params(p: FrontEndParams) -> GaussianVoltage:
    h = p.rate
    mu = p.beta1 * math.log1p(h / p.beta2) + p.beta3
    var = p.beta1**2 * h / (h + p.beta2) ** 2 + p.sigma**2
    return GaussianVoltage(mu, math.sqrt(var))


def normalize(g: GaussianVoltage, omega: float, theta_plus: float,
              theta_minus: float) -> NormalizedThresholds:
    """Voltage thresholds in units of ``omega * sigma_V``."""
    if not omega > 0:
        raise ValueError("omega must be > 0")
    if not (theta_plus > 0 and theta_minus > 0):
        raise ValueError("thresholds must be > 0")
    scale = omega * g.sigma_v
    return NormalizedThresholds(theta_minus / scale, theta_plus / scale)


def simulate_standardized_ou_path(omega: float, x0: float, dt: float, n_steps: int,
                                  rng: np.random.Generator) -> np.ndarray:
    """Exact grid samples of ``dX = -omega X dt + dW`` started at ``x0``.

    Returns ``n_steps + 1`` values including the start.
    """
    if not (dt > 0 and omega > 0):
        raise ValueError("dt and omega must be > 0")
    alpha = math.exp(-omega * dt)
    step_sd = math.sqrt(-math.expm1(-2.0 * omega * dt) / (2.0 * omega))
    xi = rng.standard_normal(n_steps)
    out = np.empty(n_steps + 1)
    out[0] = x0
    out[1:], _ = lfilter([step_sd], [1.0, -alpha], xi, zi=[alpha * x0])
    return out


def simulate_ou_path(mu_v: float, sigma_v: float, omega: float, v0: float, dt: float,
                     n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Sample the filtered voltage on the grid ``0, dt, ..., n_steps*dt``.

    Equivalent to the IIR recursion ``V' = a V + (1 - a) zeta`` with
    ``a = exp(-omega dt)`` and ``zeta ~ N(mu_v, B sigma_v**2)``,
    ``B = (omega/2)(1 + a)/(1 - a)``; computed as ``mu_v + omega sigma_v X``
    with ``X`` the standardized path, so both routes share a noise stream.
    """
    if sigma_v < 0:
        raise ValueError("sigma_v must be >= 0")
    if sigma_v == 0:
        if not (dt > 0 and omega > 0):
            raise ValueError("dt and omega must be > 0")
        t = dt * np.arange(n_steps + 1)
        return mu_v + (v0 - mu_v) * np.exp(-omega * t)
    scale = omega * sigma_v
    x = simulate_standardized_ou_path(omega, (v0 - mu_v) / scale, dt, n_steps, rng)
    return mu_v + scale * x
