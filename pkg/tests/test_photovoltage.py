import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from eventpixel import photovoltage as pv

# dim-pixel constants: few electrons per unit radiance so the sweep over L
# runs from a handful of electrons to a few hundred
DIM = dict(beta1=0.1, beta2=20.0, beta3=0.5, sigma=0.002, xi1=0.01, xi2=0.5)


def front_end(L, **kw):
    args = dict(DIM, radiance=L)
    args.update(kw)
    return pv.FrontEndParams(**args)


@pytest.mark.parametrize("field,value", [("beta1", 0.0), ("beta2", -1.0), ("sigma", -0.1),
                                         ("radiance", -1.0)])
def test_front_end_validation(field, value):
    with pytest.raises(ValueError, match=field):
        front_end(10.0, **{field: value})


def test_zero_rate_rejected():
    with pytest.raises(ValueError):
        pv.FrontEndParams(0.1, 20.0, 0.5, 0.0, 0.0, 0.0, 5.0)


def test_asymptotic_params_match_monte_carlo(rng):
    # bright pixel: the delta-method mean is off by O(1 / rate)
    p = front_end(5e4, xi1=1.0)
    g = pv.asymptotic_params(p)
    v = pv.sample_post_amp_voltage(p, rng, 200_000)
    assert v.mean() == pytest.approx(g.mu_v, abs=5 * g.sigma_v / math.sqrt(v.size))
    assert v.std() == pytest.approx(g.sigma_v, rel=0.01)


def test_ks_distance_shrinks_with_radiance():
    d = []
    for L in (10, 1e2, 1e3, 1e4):
        p = front_end(L)
        g = pv.asymptotic_params(p)
        v = pv.sample_post_amp_voltage(p, np.random.default_rng(5), 100_000)
        d.append(stats.kstest(v, "norm", args=(g.mu_v, g.sigma_v)).statistic)
    assert all(a > b for a, b in zip(d, d[1:]))


def test_normalize_units():
    g = pv.GaussianVoltage(1.0, 0.02)
    th = pv.normalize(g, 5.0, 0.094, 0.096)
    assert th.theta_plus_tilde == pytest.approx(0.94)
    assert th.theta_minus_tilde == pytest.approx(0.96)
    assert (2 * th).theta_plus_tilde == pytest.approx(1.88)
    with pytest.raises(ValueError):
        pv.normalize(g, 0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        pv.GaussianVoltage(0.0, 0.0)


def test_standardized_path_stationary_variance(rng):
    omega = 3.0
    x0 = rng.standard_normal(2000) / math.sqrt(2 * omega)
    ends = np.array([pv.simulate_standardized_ou_path(omega, x, 0.05, 40, rng)[-1] for x in x0])
    # started in stationarity, stays there
    assert ends.var() == pytest.approx(1 / (2 * omega), rel=0.1)


def test_standardized_path_exact_transition():
    # one step of size dt has mean a x0 and variance (1 - a^2) / (2 w)
    omega, dt, x0 = 2.0, 0.3, 1.5
    rng = np.random.default_rng(3)
    ends = np.array([pv.simulate_standardized_ou_path(omega, x0, dt, 1, rng)[1]
                     for _ in range(20_000)])
    a = math.exp(-omega * dt)
    assert ends.mean() == pytest.approx(a * x0, abs=0.01)
    assert ends.var() == pytest.approx((1 - a * a) / (2 * omega), rel=0.03)


def test_iir_form_matches():
    mu, s, omega, dt, v0 = 0.7, 0.01, 4.0, 0.01, 0.75
    v = pv.simulate_ou_path(mu, s, omega, v0, dt, 500, np.random.default_rng(9))
    xi = np.random.default_rng(9).standard_normal(500)
    a = math.exp(-omega * dt)
    b = (omega / 2) * (1 + a) / (1 - a)
    ref = np.empty(501)
    ref[0] = v0
    for k in range(500):
        ref[k + 1] = a * ref[k] + (1 - a) * (mu + math.sqrt(b) * s * xi[k])
    np.testing.assert_allclose(v, ref, rtol=0, atol=1e-12)


def test_noiseless_path_is_relaxation():
    v = pv.simulate_ou_path(1.0, 0.0, 2.0, 0.0, 0.1, 10, np.random.default_rng(0))
    np.testing.assert_allclose(v, 1 - np.exp(-2.0 * 0.1 * np.arange(11)))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 50), st.floats(1e-3, 1.0), st.integers(1, 50))
def test_path_shape_and_start(omega, dt, n):
    x = pv.simulate_standardized_ou_path(omega, 0.25, dt, n, np.random.default_rng(1))
    assert x.shape == (n + 1,)
    assert x[0] == 0.25
    assert np.all(np.isfinite(x))
