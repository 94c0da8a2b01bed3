import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, special

from eventpixel import specfun

mp.mp.dps = 40


@pytest.mark.parametrize("z", [0.0, 1e-8, 0.3, -0.7, 1.5, 3.9, 4.0, 4.1, -6.0, 12.0, 26.0])
def test_erfi_matches_mpmath(z):
    ref = float(mp.erfi(z))
    assert specfun.erfi(z) == pytest.approx(ref, rel=1e-13, abs=1e-300)


def test_erfi_vectorized_and_odd():
    z = np.linspace(-5, 5, 41)
    v = specfun.erfi(z)
    assert np.allclose(v, -v[::-1], rtol=0, atol=0)
    assert np.all(np.diff(v) > 0)


def test_erfi_overflow_raises():
    with pytest.raises(OverflowError):
        specfun.erfi(27.0)
    assert np.isfinite(specfun.erfi_scaled(27.0))


def test_erfi_rejects_nonfinite():
    with pytest.raises(ValueError):
        specfun.erfi(float("nan"))


@pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"rel_tol": 1e-3}, {"max_terms": 10}])
def test_eval_options_validation(kw):
    with pytest.raises(ValueError):
        specfun.EvalOptions(**kw)


def test_dawson_maximum_by_golden_section():
    # D'(x) = 1 - 2 x D(x) = 0 at the global maximum
    res = optimize.minimize_scalar(lambda x: -specfun.dawson(x), bracket=(0.5, 0.9, 1.5),
                                   method="golden", tol=1e-10)
    assert res.x == pytest.approx(0.9241388730, abs=1e-7)
    assert -res.fun == pytest.approx(0.5410442246, abs=1e-9)


@pytest.mark.parametrize("a,b,c", [(1.2, 0.0, -0.6), (4.0, 2.0, 1.0), (30.0, 29.5, 28.0),
                                   (-2.0, -3.0, -5.0), (0.5, 0.49, -0.5)])
def test_erfi_ratio_matches_mpmath(a, b, c):
    ref = (mp.erfi(a) - mp.erfi(b)) / (mp.erfi(a) - mp.erfi(c))
    assert specfun.erfi_ratio(a, b, c) == pytest.approx(float(ref), rel=1e-12)


def test_erfi_ratio_degenerate():
    with pytest.raises(ValueError):
        specfun.erfi_ratio(1.0, 0.5, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20), st.floats(0.01, 5), st.floats(0.001, 0.999))
def test_erfi_ratio_complement(c, width, frac):
    a = c + width
    b = c + frac * width
    lo = specfun.erfi_ratio(a, b, c)
    hi = specfun.erfi_ratio(c, b, a)
    assert 0 <= lo <= 1 + 1e-12
    assert lo + hi == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("x", [0.0, 1e-6, 0.5, 2.0, 10.0, 50.0, 300.0])
def test_hyp2f2_matches_mpmath(x):
    ref = float(mp.hyp2f2(1, 1, 1.5, 2, x))
    assert specfun.hyp2f2_11_3h2_2(x) == pytest.approx(ref, rel=1e-13)


def test_hyp2f2_domain():
    with pytest.raises(ValueError):
        specfun.hyp2f2_11_3h2_2(-1.0)
    with pytest.raises(OverflowError):
        specfun.hyp2f2_11_3h2_2(800.0)
    with pytest.raises(specfun.ConvergenceError):
        specfun.hyp2f2_11_3h2_2(200.0, specfun.EvalOptions(max_terms=64))


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 40))
def test_hyp2f2_integral_representation(x):
    # y^2 2F2(1,1;3/2,2;y^2) = int_0^y sqrt(pi) exp(t^2) erf(t) dt
    y = math.sqrt(x)
    quad, _ = integrate.quad(lambda t: math.sqrt(math.pi) * math.exp(t * t) * special.erf(t),
                             0, y, epsabs=0, epsrel=1e-12, limit=200)
    assert y * y * specfun.hyp2f2_11_3h2_2(x) == pytest.approx(quad, rel=1e-9, abs=1e-300)


@pytest.mark.parametrize("a", [0.0, 0.1, 0.5, 1.0, 3.7, 20.0, 1e4])
def test_erfcx_integral_quadrature(a):
    ref, _ = integrate.quad(special.erfcx, 0, a, epsabs=0, epsrel=1e-13, limit=500)
    assert specfun.erfcx_integral(a) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_erfcx_integral_vectorized():
    a = np.array([[0.2, 1.0], [5.0, 0.0]])
    out = specfun.erfcx_integral(a)
    assert out.shape == a.shape
    assert out[1, 1] == 0.0


def test_norm_helpers():
    assert specfun.norm_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert specfun.norm_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
