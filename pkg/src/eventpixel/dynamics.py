"""Deterministic diagnostics of the reference-voltage chain.

The map ``f(z) = E(Z_n | Z_{n-1} = z)`` is iterated as a crude surrogate
for the stochastic chain. Its fixed points, 2-cycles and cobweb diagram
explain the alternating polarities seen in simulated streams, and the
crossing ``p_on(z) = p_off(z)`` marks the reference level where the next
polarity is a coin flip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .event_stream import (
    ModelParams,
    conditional_event_probs,
    conditional_expected_isi,
    conditional_expected_z,
)

__all__ = [
    "FixedPoint",
    "LimitCycle",
    "Undetermined",
    "RecursionTrace",
    "FixedPointReport",
    "CobwebSegment",
    "CriticalPointReport",
    "iterate_conditionals",
    "find_fixed_points",
    "lemeray_trace",
    "write_cobweb_csv",
    "critical_point",
    "determinism_interval",
    "default_search_interval",
]

RECURRENCE_TOL = 1e-6
ROOT_TOL = 1e-10
DERIV_STEP = 1e-5
MARGINAL_BAND = 1e-3


@dataclass(frozen=True)
class FixedPoint:
    z: float
    stable: bool


@dataclass(frozen=True)
class LimitCycle:
    points: tuple


@dataclass(frozen=True)
class Undetermined:
    tail: tuple


@dataclass
class RecursionTrace:
    """Iterates of the conditional recursion.

    ``z_iterates`` holds ``z_0..z_n``; ``u``, ``v``, ``w`` hold the off
    probability, on probability and expected ISI evaluated at ``z_0..z_{n-1}``.
    ``refined`` is True when the classification came from solving for the
    limit set rather than from the raw iterates meeting the tolerance.
    """

    z_iterates: np.ndarray
    u_iterates: np.ndarray
    v_iterates: np.ndarray
    w_iterates: np.ndarray
    classification: FixedPoint | LimitCycle | Undetermined
    refined: bool = False

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# u = P(off | z_(k-1)), v = P(on | z_(k-1)), w = E(ISI | z_(k-1)) in s\n")
            fh.write("k,z_k,u_k,v_k,w_k\n")
            fh.write(f"0,{float(self.z_iterates[0])!r},,,\n")
            for k in range(1, len(self.z_iterates)):
                fh.write(f"{k},{float(self.z_iterates[k])!r},{float(self.u_iterates[k - 1])!r},"
                         f"{float(self.v_iterates[k - 1])!r},{float(self.w_iterates[k - 1])!r}\n")


def _f(p):
    return lambda z: conditional_expected_z(p, z)


def _derivative(g, z, h=DERIV_STEP):
    return (g(z + h) - g(z - h)) / (2 * h)


def _bisect(g, a, b, tol=ROOT_TOL):
    ga = g(a)
    gb = g(b)
    if ga == 0:
        return a
    if gb == 0:
        return b
    if np.sign(ga) == np.sign(gb):
        raise ValueError("root not bracketed")
    while b - a > tol:
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0:
            return m
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def _refine_near(g, guess, scale):
    # grow a bracket around the guess until g changes sign, then bisect
    d = max(scale, 1e-8)
    for _ in range(40):
        a, b = guess - d, guess + d
        if np.sign(g(a)) != np.sign(g(b)):
            return _bisect(g, a, b)
        d *= 2
    return None


def _aitken(x0, x1, x2):
    den = x2 - 2 * x1 + x0
    if den == 0:
        return x2
    return x2 - (x2 - x1) ** 2 / den


def _classify(p, z, tol=RECURRENCE_TOL):
    f = _f(p)
    m = len(z)
    tail = z[-max(3, int(math.ceil(0.2 * m))):]
    d1 = np.abs(np.diff(tail))
    d2 = np.abs(tail[2:] - tail[:-2])
    if d1.max() < tol:
        zf = float(tail[-1])
        return FixedPoint(zf, bool(abs(_derivative(f, zf)) < 1)), False
    if d2.max() < tol:
        a, b = sorted((float(tail[-1]), float(tail[-2])))
        return LimitCycle((a, b)), False
    # slowly converging stride-2 pattern: solve f(f(z)) = z near its limit
    if len(z) >= 5 and d2[-1] < d2[0] and d2[-1] < 0.1 * d1[-1] + tol:
        guess = _aitken(z[-5], z[-3], z[-1])

        def h(y):
            return f(f(y)) - y

        root = _refine_near(h, guess, 2 * abs(z[-1] - guess))
        root = None if root is None else float(root)
        if root is not None and abs(h(root)) < tol:
            other = float(f(root))
            if abs(other - root) < tol:
                return FixedPoint(root, bool(abs(_derivative(f, root)) < 1)), True
            a, b = sorted((root, other))
            if abs(f(other) - root) < tol:
                return LimitCycle((a, b)), True
    return Undetermined(tuple(float(v) for v in tail)), False


def iterate_conditionals(p: ModelParams, z0: float, n: int) -> RecursionTrace:
    """Run ``z_k = f(z_{k-1})`` for ``n`` steps, recording the conditionals.

    The tail (last 20% of iterates) is classified as a fixed point or a
    2-cycle when successive iterates at stride 1 or 2 agree within 1e-6.
    When they do not yet agree but the stride-2 differences are shrinking,
    the limit is located by bisection on ``f(f(z)) = z`` near the Aitken
    extrapolate of the tail and ``refined`` is set. Anything else,
    including longer cycles, is ``Undetermined``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    z = np.empty(n + 1)
    z[0] = z0
    u = np.empty(n)
    v = np.empty(n)
    w = np.empty(n)
    for k in range(n):
        u[k], v[k] = conditional_event_probs(p, z[k])
        w[k] = conditional_expected_isi(p, z[k])
        z[k + 1] = conditional_expected_z(p, z[k])
    cls, refined = _classify(p, z)
    return RecursionTrace(z, u, v, w, cls, refined)


@dataclass(frozen=True)
class FixedPointReport:
    location: float
    derivative: float
    stable: bool
    marginal: bool
    residual: float


def default_search_interval(p: ModelParams) -> tuple[float, float]:
    s = max(1.0, 1.0 / math.sqrt(2 * p.omega))
    return -(p.theta_minus_tilde + 3) * s, (p.theta_plus_tilde + 3) * s


def find_fixed_points(p: ModelParams, search_interval=None,
                      grid_points: int = 4001) -> list[FixedPointReport]:
    """All sign changes of ``f(z) - z`` on a grid, bisected to 1e-10."""
    lo, hi = default_search_interval(p) if search_interval is None else search_interval
    if not hi > lo:
        raise ValueError("empty search interval")
    f = _f(p)

    def g(y):
        return f(y) - y

    grid = np.linspace(lo, hi, grid_points)
    vals = g(grid)
    out = []
    for i in range(grid_points - 1):
        if vals[i] == 0 or np.sign(vals[i]) != np.sign(vals[i + 1]):
            if vals[i + 1] == 0 and i + 1 < grid_points - 1:
                continue  # counted at the next cell
            r = float(grid[i]) if vals[i] == 0 else float(_bisect(g, grid[i], grid[i + 1]))
            d = float(_derivative(f, r))
            out.append(FixedPointReport(r, d, abs(d) < 1, abs(abs(d) - 1) < MARGINAL_BAND,
                                        float(abs(g(r)))))
    return out


@dataclass(frozen=True)
class CobwebSegment:
    """One piece of the cobweb path from ``(x0, y0)`` to ``(x1, y1)``.

    ``kind`` is ``"point"`` for the initial ``(z_0, z_1)``, ``"horizontal"``
    for a move to the diagonal and ``"vertical"`` for a move to the curve.
    """

    k: int
    x0: float
    y0: float
    x1: float
    y1: float
    kind: str


def lemeray_trace(p: ModelParams, z0: float, n: int) -> list[CobwebSegment]:
    """Cobweb path of ``n`` iterations of ``f`` started at ``z0``.

    Starts with the point ``(z_0, z_1)``, then alternates a horizontal
    segment to the diagonal ``(z_k, z_k)`` and a vertical segment to the
    curve ``(z_k, z_{k+1})``, ending on the diagonal at ``(z_n, z_n)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    f = _f(p)
    z = [float(z0)]
    for _ in range(n):
        z.append(float(f(z[-1])))
    segs = [CobwebSegment(0, z[0], z[1], z[0], z[1], "point")]
    for k in range(1, n + 1):
        segs.append(CobwebSegment(k, z[k - 1], z[k], z[k], z[k], "horizontal"))
        if k < n:
            segs.append(CobwebSegment(k, z[k], z[k], z[k], z[k + 1], "vertical"))
    return segs


def write_cobweb_csv(segments, path) -> None:
    """Vertices of the cobweb path; ``x`` is on the ``z_k`` axis, ``y`` on ``z_(k+1)``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# x: z_k axis, y: z_(k+1) axis (normalized voltage); k colours the iteration\n")
        fh.write("k,x,y,segment_type\n")
        for s in segments:
            fh.write(f"{s.k},{s.x1!r},{s.y1!r},{s.kind}\n")


@dataclass(frozen=True)
class CriticalPointReport:
    z_star: float
    isi_argmax: float
    expectation_root: float

    @property
    def spread(self) -> float:
        v = (self.z_star, self.isi_argmax, self.expectation_root)
        return max(v) - min(v)


def _p_on_minus_half(p):
    return lambda z: np.asarray(conditional_event_probs(p, z)[1]) - 0.5


def critical_point(p: ModelParams, grid_step: float = 1e-4,
                   half_width: float = 0.5) -> CriticalPointReport:
    """Level ``z*`` where ``p_on = p_off = 1/2``, with two cross-checks.

    The cross-checks are the argmax of the expected ISI on a grid of step
    ``grid_step`` within ``half_width`` of ``z*`` and the root of
    ``E(Z_n | Z_{n-1} = z)`` nearest the origin.
    """
    lo, hi = default_search_interval(p)
    zs = _bisect(_p_on_minus_half(p), lo, hi)
    grid = np.arange(zs - half_width, zs + half_width + grid_step / 2, grid_step)
    isi = conditional_expected_isi(p, grid)
    z_isi = float(grid[int(np.argmax(isi))])
    f = _f(p)
    scan = np.linspace(lo, hi, 4001)
    vals = f(scan)
    roots = [_bisect(f, scan[i], scan[i + 1]) for i in range(len(scan) - 1)
             if np.sign(vals[i]) != np.sign(vals[i + 1])]
    z_root = float(min(roots, key=abs)) if roots else float("nan")
    return CriticalPointReport(float(zs), z_isi, float(z_root))


def determinism_interval(p: ModelParams, level: float = 0.99) -> tuple[float, float]:
    """``(a, b)`` with ``p_on(a) = level`` and ``p_off(b) = level``.

    Left of ``a`` the next event is on with probability above ``level``,
    right of ``b`` it is off with probability above ``level``.
    """
    if not 0.5 < level < 1:
        raise ValueError("level must lie in (1/2, 1)")
    lo, hi = default_search_interval(p)
    zs = _bisect(_p_on_minus_half(p), lo, hi)

    def on_gap(z):
        return conditional_event_probs(p, z)[1] - level

    def off_gap(z):
        return conditional_event_probs(p, z)[0] - level

    return float(_bisect(on_gap, lo, zs)), float(_bisect(off_gap, zs, hi))
