"""Special functions behind the closed-form exit statistics.

Everything here is vectorized over numpy arrays and pure. The imaginary
error function only ever enters the model through ratios of differences,
so :func:`erfi_ratio` is the workhorse: it rescales each term by a common
exponential so that the ratio stays finite long after ``erfi`` itself
would overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "EvalOptions",
    "ConvergenceError",
    "erfi",
    "erfi_scaled",
    "erfi_ratio",
    "dawson",
    "hyp2f2_11_3h2_2",
    "erfcx_integral",
    "norm_pdf",
    "norm_cdf",
]

_TWO_OVER_SQRTPI = 2.0 / math.sqrt(math.pi)
_SERIES_RADIUS = 4.0
# exp(z**2) overflows float64 past this
_EXP_ARG_MAX = 709.78


class ConvergenceError(ArithmeticError):
    """A series hit its term cap before reaching the requested tolerance."""


@dataclass(frozen=True)
class EvalOptions:
    rel_tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-6):
            raise ValueError(f"rel_tol must lie in (0, 1e-6], got {self.rel_tol}")
        if self.max_terms < 64:
            raise ValueError(f"max_terms must be >= 64, got {self.max_terms}")


DEFAULT_OPTIONS = EvalOptions()


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("arguments must be finite")
    return arr


def _unwrap(arr, like):
    return arr.item() if np.ndim(like) == 0 else arr


def dawson(z):
    """Dawson function ``D(z) = exp(-z**2) * int_0^z exp(t**2) dt``."""
    arr = _as_array(z)
    return _unwrap(special.dawsn(arr), z)


def _erfi_series(z, opts):
    # Maclaurin: erfi(z) = 2/sqrt(pi) * sum z^(2k+1) / (k! (2k+1)); every term
    # has the sign of z, so there is no cancellation.
    z2 = z * z
    term = z.copy()  # z^(2k+1)/k!
    total = z.copy()
    comp = np.zeros_like(z)
    for k in range(1, opts.max_terms):
        term = term * z2 / k
        add = term / (2 * k + 1)
        y = add - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if np.all(np.abs(add) <= opts.rel_tol * 1e-2 * np.abs(total)):
            return _TWO_OVER_SQRTPI * total
    raise ConvergenceError("erfi series did not converge")


def erfi(z, opts: EvalOptions = DEFAULT_OPTIONS):
    """Imaginary error function ``(2/sqrt(pi)) * int_0^z exp(t**2) dt``.

    Uses the Maclaurin series for ``|z| <= 4`` and the Dawson form
    ``(2/sqrt(pi)) exp(z**2) D(z)`` beyond. Raises ``OverflowError`` when
    ``exp(z**2)`` is not representable; use :func:`erfi_scaled` there.
    """
    arr = _as_array(z)
    a = np.atleast_1d(arr)
    if np.any(a * a > _EXP_ARG_MAX):
        raise OverflowError("erfi overflows float64; use erfi_scaled")
    out = np.empty_like(a)
    small = np.abs(a) <= _SERIES_RADIUS
    if np.any(small):
        out[small] = _erfi_series(a[small], opts)
    big = ~small
    if np.any(big):
        out[big] = _TWO_OVER_SQRTPI * np.exp(a[big] ** 2) * special.dawsn(a[big])
    return out.item() if arr.ndim == 0 else out.reshape(arr.shape)


def erfi_scaled(z):
    """``exp(-z**2) * erfi(z)``, finite for every finite ``z``."""
    arr = _as_array(z)
    return _unwrap(_TWO_OVER_SQRTPI * special.dawsn(arr), z)


def erfi_ratio(a, b, c):
    """``(erfi(a) - erfi(b)) / (erfi(a) - erfi(c))`` without overflow.

    Each ``erfi`` is written as ``exp(y**2) * erfi_scaled(y)`` and the
    largest exponential is divided out of numerator and denominator.
    With ``a = sqrt(w) u``, ``b = sqrt(w) x``, ``c = sqrt(w) l`` this is the
    probability that an OU path started at ``x`` leaves ``(l, u)`` through
    ``l``; swapping ``a`` and ``c`` gives the complementary side.
    """
    a_, b_, c_ = np.broadcast_arrays(_as_array(a), _as_array(b), _as_array(c))
    if np.any(a_ == c_):
        raise ValueError("erfi_ratio: empty denominator interval (a == c)")
    a2, b2, c2 = a_ * a_, b_ * b_, c_ * c_
    m = np.maximum(np.maximum(a2, b2), c2)
    ea = np.exp(a2 - m) * special.dawsn(a_)
    eb = np.exp(b2 - m) * special.dawsn(b_)
    ec = np.exp(c2 - m) * special.dawsn(c_)
    out = (ea - eb) / (ea - ec)
    if np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(c) == 0:
        return float(out)
    return out


def hyp2f2_11_3h2_2(x, opts: EvalOptions = DEFAULT_OPTIONS):
    """``2F2(1, 1; 3/2, 2; x)`` for ``x >= 0`` by compensated series summation.

    Term ratio is ``(k + 1) x / ((k + 3/2)(k + 2))``; all terms are positive,
    so Neumaier summation keeps the accumulated error at a few ulps even
    when hundreds of terms are needed.
    """
    arr = _as_array(x)
    if np.any(arr < 0):
        raise ValueError("hyp2f2_11_3h2_2 is only implemented for x >= 0")
    if np.any(arr > _EXP_ARG_MAX - 10):
        raise OverflowError("2F2 overflows float64 for this argument")
    xs = np.atleast_1d(arr).astype(float)
    total = np.ones_like(xs)
    comp = np.zeros_like(xs)
    term = np.ones_like(xs)
    active = np.ones(xs.shape, dtype=bool)
    for k in range(opts.max_terms):
        ratio = (k + 1.0) * xs / ((k + 1.5) * (k + 2.0))
        term = term * ratio
        t = total + term
        big = np.abs(total) >= np.abs(term)
        corr = np.where(big, (total - t) + term, (term - t) + total)
        comp = np.where(active, comp + corr, comp)
        total = np.where(active, t, total)
        # once the ratio has dropped below 1/2 the tail is bounded by one term
        done = (ratio < 0.5) & (term <= opts.rel_tol * 1e-2 * total)
        active &= ~done
        if not active.any():
            break
    else:
        raise ConvergenceError(
            f"2F2 series not converged after {opts.max_terms} terms"
        )
    out = total + comp
    return out.item() if arr.ndim == 0 else out.reshape(arr.shape)


# Gauss-Legendre panels for int_0^a erfcx(t) dt; erfcx is entire and varies
# on the scale of t, so dyadic panels need only a fixed node count.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_PANEL_EDGES = np.concatenate([[0.0, 0.5], 2.0 ** np.arange(0, 40)])


def erfcx_integral(a):
    """``int_0^a erfcx(t) dt`` for ``a >= 0``.

    Appears in the cancellation-free form of the expected OU exit time.
    """
    arr = _as_array(a)
    if np.any(arr < 0):
        raise ValueError("erfcx_integral requires a >= 0")
    flat = np.atleast_1d(arr).ravel()
    total = np.zeros_like(flat)
    top = float(flat.max()) if flat.size else 0.0
    for lo, hi in zip(_PANEL_EDGES[:-1], _PANEL_EDGES[1:]):
        if lo >= top:
            break
        lo_a = np.minimum(flat, lo)
        hi_a = np.minimum(flat, hi)
        half = 0.5 * (hi_a - lo_a)
        mid = 0.5 * (hi_a + lo_a)
        t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        total += half * (special.erfcx(t) @ _GL_WEIGHTS)
    if top > _PANEL_EDGES[-1]:
        raise ValueError("erfcx_integral argument too large")
    return total.item() if arr.ndim == 0 else total.reshape(arr.shape)


def norm_pdf(x):
    arr = np.asarray(x, dtype=float)
    return _unwrap(np.exp(-0.5 * arr * arr) / math.sqrt(2.0 * math.pi), x)


def norm_cdf(x):
    arr = np.asarray(x, dtype=float)
    return _unwrap(special.ndtr(arr), x)
