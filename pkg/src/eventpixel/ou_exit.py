"""Exit of the standardized OU process ``dX = -omega X dt + dW`` from ``(l, u)``.

Closed forms give the exit side law and the mean exit time. The full joint
law of (exit time, exit side) comes from the backward equation
``0.5 g'' - omega x g' = dg/dt`` with three boundary-condition sets:

* ``g1(x, t) = P(tau <= t)``, boundaries (1, 1)
* ``g2(x, t) = P(tau <= t, exit at l)``, boundaries (1, 0)
* ``g3(x, t) = P(tau <= t, exit at u)``, boundaries (0, 1)

all starting from zero inside the interval. Two samplers of the joint law
are provided: a path-free one (closed-form side, then inversion of the
numerically solved conditional CDF) and a fine-step path simulation with a
Brownian-bridge crossing check that serves as an independent oracle.
"""
from __future__ import annotations

import csv
import enum
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.signal import lfilter

from . import specfun

__all__ = [
    "Side",
    "ExitProblem",
    "ExitSample",
    "ExitSamples",
    "PdeSolution",
    "ExitTimeTable",
    "ExitTimeCache",
    "NumericalInstabilityError",
    "TailMassError",
    "exit_side_probs",
    "expected_exit_position",
    "expected_exit_time",
    "solve_exit_pdes",
    "conditional_exit_cdf",
    "exit_time_table",
    "sample_exit_pathfree",
    "sample_exit_path_oracle",
    "default_oracle_dt",
]

TAIL_MASS = 1e-6
# route switch for the mean exit time: beyond this value of omega*y**2 the
# direct 2F2 form loses more than ~1e-11 to cancellation
_DIRECT_2F2_LIMIT = 10.0
_RANNACHER_STEPS = 12
_ORACLE_BLOCK_CELLS = 1_000_000


class NumericalInstabilityError(ArithmeticError):
    """The PDE solution left the admissible range [0, 1]."""


class TailMassError(ArithmeticError):
    """A uniform draw fell outside the CDF mass covered by the solver."""


class Side(enum.Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class ExitProblem:
    """Start ``start`` inside ``[lower, upper]`` for the OU process with rate ``omega``."""

    omega: float
    lower: float
    upper: float
    start: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be > 0")
        if not self.lower < self.upper:
            raise ValueError("need lower < upper")
        if not self.lower <= self.start <= self.upper:
            raise ValueError("start must lie in [lower, upper]")

    @property
    def on_boundary(self) -> bool:
        return self.start == self.lower or self.start == self.upper


@dataclass(frozen=True)
class ExitSample:
    time: float
    side: Side


@dataclass
class ExitSamples:
    """A batch of exit draws; ``lower[i]`` is True for an exit through ``l``."""

    times: np.ndarray
    lower: np.ndarray

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> ExitSample:
        return ExitSample(float(self.times[i]), Side.LOWER if self.lower[i] else Side.UPPER)


# --------------------------------------------------------------------------
# closed forms


def side_probs(omega, lower, upper, start):
    """Vectorized ``(P(exit at lower), P(exit at upper))``.

    The smaller probability is computed as a ratio and the larger one as
    its complement, so the pair sums to exactly one and the small one keeps
    full relative precision.
    """
    s = math.sqrt(omega)
    lo, up, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lower, upper, start)))
    if np.any(up <= lo):
        raise ValueError("degenerate exit interval (upper <= lower)")
    p_lo = np.clip(specfun.erfi_ratio(s * up, s * x, s * lo), 0.0, 1.0)
    p_up = np.clip(specfun.erfi_ratio(s * lo, s * x, s * up), 0.0, 1.0)
    lo_small = p_lo <= p_up
    p_lower = np.where(lo_small, p_lo, 1.0 - p_up)
    p_upper = np.where(lo_small, 1.0 - p_lo, p_up)
    if p_lower.ndim == 0:
        return float(p_lower), float(p_upper)
    return p_lower, p_upper


def exit_side_probs(p: ExitProblem) -> tuple[float, float]:
    return side_probs(p.omega, p.lower, p.upper, p.start)


def expected_exit_position(p: ExitProblem) -> float:
    p_lo, p_up = exit_side_probs(p)
    return p.lower * p_lo + p.upper * p_up


def _mean_exit_direct(omega, lo, up, x, p_lo, p_up):
    def g(y):
        return y * y * specfun.hyp2f2_11_3h2_2(omega * y * y)

    gx = g(x)
    return p_lo * (g(lo) - gx) + p_up * (g(up) - gx)


def _mean_exit_scaled(omega, lo, up, x, p_lo, p_up):
    # Same quantity with y^2 F(omega y^2) rewritten as
    # (pi/2w) |erfi(sqrt(w) y)| - (sqrt(pi)/w) J(sqrt(w)|y|), J = int erfcx.
    # The erfi part is harmonic for the generator and drops out for y > 0,
    # so for intervals centred at or right of zero only terms with y < 0
    # retain it. Intervals centred left of zero are reflected first.
    flip = (lo + up) < 0
    lo, up, x = np.where(flip, -up, lo), np.where(flip, -lo, up), np.where(flip, -x, x)
    p_lo, p_up = np.where(flip, p_up, p_lo), np.where(flip, p_lo, p_up)
    s = math.sqrt(omega)
    k = math.pi / omega

    def g(y):
        val = -(math.sqrt(math.pi) / omega) * specfun.erfcx_integral(s * np.abs(y))
        neg = y < 0
        if np.any(neg):
            val = val + np.where(neg, k * specfun.erfi(s * np.where(neg, -y, 0.0)), 0.0)
        return val

    return p_lo * g(lo) + p_up * g(up) - g(x)


def mean_exit_time(omega, lower, upper, start):
    """Vectorized expected exit time from ``(lower, upper)`` started at ``start``."""
    lo, up, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lower, upper, start)))
    p_lo, p_up = side_probs(omega, lo, up, x)
    p_lo, p_up = np.asarray(p_lo), np.asarray(p_up)
    ymax2 = omega * np.maximum(np.maximum(lo * lo, up * up), x * x)
    direct = ymax2 <= _DIRECT_2F2_LIMIT
    out = np.empty(lo.shape)
    if np.any(direct):
        out[direct] = _mean_exit_direct(omega, lo[direct], up[direct], x[direct],
                                        p_lo[direct], p_up[direct])
    if np.any(~direct):
        m = ~direct
        out[m] = _mean_exit_scaled(omega, lo[m], up[m], x[m], p_lo[m], p_up[m])
    out = np.where((x <= lo) | (x >= up), 0.0, np.maximum(out, 0.0))
    return float(out) if out.ndim == 0 else out


def expected_exit_time(p: ExitProblem) -> float:
    """Mean exit time ``E tau`` in seconds (closed form with ``2F2``)."""
    if p.on_boundary:
        return 0.0
    return mean_exit_time(p.omega, p.lower, p.upper, p.start)


# --------------------------------------------------------------------------
# backward equation


@dataclass
class PdeSolution:
    """CDFs ``g1, g2, g3`` on ``grid_t x grid_x`` (rows are time levels)."""

    problem: ExitProblem
    grid_x: np.ndarray
    grid_t: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray

    @property
    def t_max(self) -> float:
        return float(self.grid_t[-1])

    def at_start(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Time series of g1, g2, g3 at the problem's start point."""
        idx, w = _interp_weights(self.grid_x, self.problem.start)
        series = tuple(g[:, idx] @ w for g in (self.g1, self.g2, self.g3))
        if not self.problem.on_boundary:
            # the t = 0 row jumps at the boundary; inside it is exactly zero
            for s in series:
                s[0] = 0.0
        return series

    def to_csv(self, path, x_stride: int = 1, t_stride: int = 1) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("# x [dimensionless], t [s], g1 g2 g3 [probability]\n")
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["x", "t", "g1", "g2", "g3"])
            for i in range(0, len(self.grid_t), t_stride):
                t = self.grid_t[i]
                for j in range(0, len(self.grid_x), x_stride):
                    wr.writerow([repr(float(self.grid_x[j])), repr(float(t)),
                                 repr(float(self.g1[i, j])), repr(float(self.g2[i, j])),
                                 repr(float(self.g3[i, j]))])


def _interp_weights(grid, x0):
    """Four-point Lagrange weights for evaluating grid data at ``x0``."""
    n = len(grid)
    j = int(np.clip(np.searchsorted(grid, x0) - 2, 0, n - 4))
    idx = np.arange(j, j + 4)
    nodes = grid[idx]
    hit = np.nonzero(nodes == x0)[0]
    w = np.zeros(4)
    if hit.size:
        w[hit[0]] = 1.0
        return idx, w
    for k in range(4):
        others = np.delete(nodes, k)
        w[k] = np.prod((x0 - others) / (nodes[k] - others))
    return idx, w


def _generator_bands(omega, grid_x):
    """Tridiagonal coefficients of ``0.5 d2/dx2 - omega x d/dx`` on interior nodes.

    Central differences while the mesh Peclet number ``omega |x| dx`` is at
    most 1 (diagonally dominant, monotone); first-order upwinding beyond.
    """
    dx = grid_x[1] - grid_x[0]
    x = grid_x[1:-1]
    drift = -omega * x
    diff = 0.5 / dx**2
    lower = np.full(x.shape, diff)
    upper = np.full(x.shape, diff)
    central = np.abs(drift) * dx <= 1.0
    lower = lower - np.where(central, drift / (2 * dx), np.where(drift < 0, drift / dx, 0.0))
    upper = upper + np.where(central, drift / (2 * dx), np.where(drift > 0, drift / dx, 0.0))
    diag = -(lower + upper)
    return lower, diag, upper


def _principal_rate(lower, diag, upper):
    """Slowest decay rate of the discretized generator (Dirichlet)."""
    off = np.sqrt(lower[1:] * upper[:-1])
    top = eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                           select_range=(len(diag) - 1, len(diag) - 1))
    return -float(top[0])


def _default_t_max(omega, rate):
    # first-mode coefficient of P(tau > t) is below 4/pi, hence the 1.5
    return max(20.0 / omega, math.log(1.5 / TAIL_MASS) / rate)


def _time_grid(t_max, nt, grade=2.0):
    return t_max * (np.arange(nt + 1) / nt) ** grade


_BOUNDARY_VALUES = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0]])


def _crank_nicolson(problem, grid_x, grid_t, record, columns=(0, 1, 2)):
    omega = problem.omega
    a, d, c = _generator_bands(omega, grid_x)
    m = len(d)
    # boundary values (lower, upper) for the selected g1, g2, g3
    bvals = _BOUNDARY_VALUES[:, list(columns)]
    src = np.zeros((m, len(columns)))
    src[0] += a[0] * bvals[0]
    src[-1] += c[-1] * bvals[1]

    def apply_a(g):
        out = d[:, None] * g
        out[1:] += a[1:, None] * g[:-1]
        out[:-1] += c[:-1, None] * g[1:]
        return out + src

    def implicit(dt, theta, rhs):
        ab = np.empty((3, m))
        ab[0, 1:] = -theta * dt * c[:-1]
        ab[1] = 1.0 - theta * dt * d
        ab[2, :-1] = -theta * dt * a[1:]
        return solve_banded((1, 1), ab, rhs, check_finite=False)

    def step(g, dt, theta):
        rhs = g + (1.0 - theta) * dt * apply_a(g) + theta * dt * src
        return implicit(dt, theta, rhs)

    g = np.zeros((m, len(columns)))
    out = [record(g)]
    for n in range(1, len(grid_t)):
        dt = grid_t[n] - grid_t[n - 1]
        if n <= _RANNACHER_STEPS:
            # Rannacher start: damp the boundary/initial mismatch with
            # backward-Euler half steps before switching to CN. The graded
            # grid makes the first steps tiny, so a handful are needed.
            g = step(g, dt / 2, 1.0)
            g = step(g, dt / 2, 1.0)
        else:
            g = step(g, dt, 0.5)
        out.append(record(g))
    return out


def _full_rows(g):
    m = g.shape[0]
    full = np.empty((3, m + 2))
    full[:, 1:-1] = g.T
    full[0, 0], full[0, -1] = 1.0, 1.0
    full[1, 0], full[1, -1] = 1.0, 0.0
    full[2, 0], full[2, -1] = 0.0, 1.0
    return full


def _check_range(arr, eps=1e-6):
    if np.any(arr < -eps) or np.any(arr > 1 + eps) or not np.all(np.isfinite(arr)):
        raise NumericalInstabilityError("PDE solution left [-1e-6, 1 + 1e-6]")


def _resolve_grid(p, t_max, nx, nt):
    if nx < 64 or nt < 64:
        raise ValueError("nx and nt must both be >= 64")
    grid_x = np.linspace(p.lower, p.upper, nx)
    if t_max is None:
        t_max = _default_t_max(p.omega, _principal_rate(*_generator_bands(p.omega, grid_x)))
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    return grid_x, _time_grid(t_max, nt)


def solve_exit_pdes(p: ExitProblem, t_max: float | None = None, nx: int = 801,
                    nt: int = 2000) -> PdeSolution:
    """Solve the three backward-equation problems on a shared grid.

    Crank-Nicolson in time on a grid graded as ``t_max (k/nt)**2`` so that
    the early rise and the long exponential tail are both resolved. When
    ``t_max`` is omitted it is chosen from the slowest decay rate of the
    discretized generator so that the tail mass beyond it is below 1e-6.
    """
    grid_x, grid_t = _resolve_grid(p, t_max, nx, nt)
    rows = _crank_nicolson(p, grid_x, grid_t, _full_rows)
    stack = np.stack(rows)  # (nt+1, 3, nx)
    stack[0, :, 1:-1] = 0.0
    _check_range(stack)
    return PdeSolution(p, grid_x, grid_t, stack[:, 0].copy(), stack[:, 1].copy(),
                       stack[:, 2].copy())


def conditional_exit_cdf(sol: PdeSolution, p: ExitProblem, side: Side, t):
    """``P(tau <= t | exit side)`` at the start point, monotone-cubic in ``t``.

    Uses the same normalized CDF as the path-free sampler.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > sol.t_max):
        raise ValueError(f"t outside the solved range [0, {sol.t_max}]")
    if p.on_boundary:
        return np.ones_like(t_arr) if t_arr.ndim else 1.0
    if p != sol.problem:
        raise ValueError("solution was computed for a different problem")
    out = exit_time_table(sol)._pchip(side is Side.LOWER)(t_arr)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# path-free sampling


@dataclass
class ExitTimeTable:
    """Conditional exit-time CDFs at one start point, normalized to end at 1."""

    grid_t: np.ndarray
    cdf_lower: np.ndarray
    cdf_upper: np.ndarray
    _interp: dict = field(default_factory=dict, repr=False)

    def _pchip(self, lower: bool):
        if lower not in self._interp:
            self._interp[lower] = PchipInterpolator(
                self.grid_t, self.cdf_lower if lower else self.cdf_upper)
        return self._interp[lower]

    def invert(self, v: np.ndarray, lower: bool, tol: float = 1e-10) -> np.ndarray:
        """Times ``t`` with ``CDF(t) = v``: bracket on the grid, then bisect the interpolant."""
        cdf = self.cdf_lower if lower else self.cdf_upper
        v = np.asarray(v, dtype=float)
        if np.any(v > cdf[-1]):
            raise TailMassError("uniform draw beyond covered CDF mass")
        i = np.clip(np.searchsorted(cdf, v, side="left"), 1, len(cdf) - 1)
        lo = self.grid_t[i - 1].copy()
        hi = self.grid_t[i].copy()
        f = self._pchip(lower)
        while np.any(hi - lo > tol):
            mid = 0.5 * (lo + hi)
            below = f(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def _remaining_mass(grid_t, g):
    # exponential tail: mass left after t_max is about slope / decay rate,
    # the rate read off the slope ratio over the last tenth of the horizon
    t = np.asarray(grid_t)
    k = int(np.searchsorted(t, 0.9 * t[-1]))
    k = min(max(k, 1), len(t) - 2)
    s_end = (g[-1] - g[-2]) / (t[-1] - t[-2])
    s_k = (g[k] - g[k - 1]) / (t[k] - t[k - 1])
    if s_end <= 0:
        return 0.0
    if s_k <= s_end:
        return math.inf
    rate = math.log(s_k / s_end) / (t[-1] - t[k])
    return s_end / rate


def _table_from_series(p, grid_t, g2, g3):
    p_lo, p_up = exit_side_probs(p)
    cols = []
    for g, mass in ((g2, p_lo), (g3, p_up)):
        g = np.maximum.accumulate(np.clip(g, 0.0, None))
        # the discretized long-time limit differs from the closed form by the
        # spatial truncation error (relative O(h^2), largest on the rare side);
        # renormalize, but refuse when real tail mass lies past the horizon
        if _remaining_mass(grid_t, g) > max(1e-3 * g[-1], TAIL_MASS):
            raise TailMassError("solved horizon does not cover the exit-time mass")
        if abs(mass - g[-1]) > max(0.05 * mass, TAIL_MASS):
            raise NumericalInstabilityError("PDE side mass disagrees with the closed form")
        cols.append(g / g[-1] if g[-1] > 0 else np.ones_like(g))
    return ExitTimeTable(np.asarray(grid_t), cols[0], cols[1])


def exit_time_table(sol: PdeSolution) -> ExitTimeTable:
    _, g2, g3 = sol.at_start()
    return _table_from_series(sol.problem, sol.grid_t, g2, g3)


def _solve_table(p: ExitProblem, nx: int, nt: int) -> ExitTimeTable:
    """Like ``exit_time_table(solve_exit_pdes(...))`` but solves only g2, g3 at the start."""
    grid_x, grid_t = _resolve_grid(p, None, nx, nt)
    idx, w = _interp_weights(grid_x, p.start)
    inner = idx - 1
    m = len(grid_x) - 2
    if inner.min() >= 0 and inner.max() < m:
        def record(g):
            return w @ g[inner]
    else:
        bvals = _BOUNDARY_VALUES[:, 1:]

        def record(g):
            full = np.vstack([bvals[0], g, bvals[1]])
            return w @ full[idx]

    rows = np.array(_crank_nicolson(p, grid_x, grid_t, record, columns=(1, 2)))
    rows[0] = 0.0
    _check_range(rows)
    return _table_from_series(p, grid_t, rows[:, 0], rows[:, 1])


def sample_exit_pathfree(p: ExitProblem, sol: PdeSolution | ExitTimeTable,
                         rng: np.random.Generator, size: int | None = None):
    """Draw ``(tau, side)``: side from the closed form, ``tau`` by CDF inversion."""
    n = 1 if size is None else size
    if p.on_boundary:
        side_lower = p.start == p.lower
        samples = ExitSamples(np.zeros(n), np.full(n, side_lower))
    else:
        table = sol if isinstance(sol, ExitTimeTable) else exit_time_table(sol)
        p_lo, _ = exit_side_probs(p)
        lower = rng.random(n) < p_lo
        v = rng.random(n)
        times = np.empty(n)
        for flag in (True, False):
            m = lower == flag
            if m.any():
                times[m] = table.invert(v[m], flag)
        samples = ExitSamples(times, lower)
    return samples[0] if size is None else samples


class ExitTimeCache:
    """Exit-time tables for the event chain, keyed by reference voltage.

    For the chain the interval is ``(z - theta_minus, z + theta_plus)`` and
    the start is ``z`` itself, so each ``z`` needs its own PDE solve. With a
    ``spacing`` the tables live on the lattice ``k * spacing`` and a draw at
    ``z`` uses one of the two neighbouring nodes chosen with linear weights,
    which samples from the linear interpolation of their CDFs. With
    ``spacing=None`` every distinct ``z`` is solved exactly.

    Readers may share one cache across threads; insertion takes a lock.
    """

    def __init__(self, omega: float, theta_minus: float, theta_plus: float,
                 spacing: float | None = 0.01, nx: int = 401, nt: int = 1500):
        if spacing is not None and not spacing > 0:
            raise ValueError("spacing must be > 0 or None")
        self.omega = omega
        self.theta_minus = theta_minus
        self.theta_plus = theta_plus
        self.spacing = spacing
        self.nx = nx
        self.nt = nt
        self._tables: dict = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self._tables)

    def problem(self, z: float) -> ExitProblem:
        return ExitProblem(self.omega, z - self.theta_minus, z + self.theta_plus, z)

    def _get(self, key, z):
        table = self._tables.get(key)
        if table is None:
            table = _solve_table(self.problem(z), self.nx, self.nt)
            with self._lock:
                table = self._tables.setdefault(key, table)
        return table

    def table(self, z: float) -> ExitTimeTable:
        if self.spacing is None:
            return self._get(float(z), float(z))
        k = int(round(z / self.spacing))
        return self._get(k, k * self.spacing)

    def sample_times(self, z: np.ndarray, lower: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
        """Exit durations conditioned on start ``z[i]`` and side ``lower[i]``."""
        z = np.asarray(z, dtype=float)
        lower = np.asarray(lower, dtype=bool)
        n = len(z)
        v = rng.random(n)
        if self.spacing is None:
            keys = z
            nodes = z
        else:
            pos = z / self.spacing
            base = np.floor(pos)
            up = rng.random(n) < (pos - base)
            keys = (base + up).astype(np.int64)
            nodes = keys * self.spacing
        times = np.empty(n)
        order = np.lexsort((lower, keys))
        ks, ls = keys[order], lower[order]
        cuts = np.nonzero((ks[1:] != ks[:-1]) | (ls[1:] != ls[:-1]))[0] + 1
        for grp in np.split(order, cuts):
            if grp.size == 0:
                continue
            i = grp[0]
            key = float(keys[i]) if self.spacing is None else int(keys[i])
            table = self._get(key, float(nodes[i]))
            times[grp] = table.invert(v[grp], bool(lower[i]))
        return times


# --------------------------------------------------------------------------
# path oracle


def path_oracle_times(omega: float, lower, upper, start, dt: float,
                      rng: np.random.Generator) -> ExitSamples:
    """Fine-step exit simulation for many (possibly different) intervals.

    Steps the exact OU transition and, between grid points, tests each
    barrier with the Brownian-bridge crossing probability
    ``exp(-2 (b - x0)(b - x1) / dt)`` (unit diffusion, drift frozen over the
    step). A crossing with the endpoint outside is placed by linear
    interpolation; a crossing seen only by the bridge test is placed at the
    middle of the step. Paths advance in blocks of steps to keep the Python
    loop short.
    """
    lo, up, x = (np.array(v, dtype=float).ravel() for v in np.broadcast_arrays(lower, upper, start))
    n = x.size
    times = np.zeros(n)
    exit_lower = x <= lo
    alive = np.nonzero((x > lo) & (x < up))[0]
    a = math.exp(-omega * dt)
    sd = math.sqrt(-math.expm1(-2.0 * omega * dt) / (2.0 * omega))
    pos = x[alive]
    l_a, u_a = lo[alive][:, None], up[alive][:, None]
    t0 = np.zeros(alive.size)
    while alive.size:
        m = alive.size
        k = int(min(1024, max(16, _ORACLE_BLOCK_CELLS // m)))
        path, _ = lfilter([sd], [1.0, -a], rng.standard_normal((m, k)), axis=1,
                          zi=(a * pos)[:, None])
        v = rng.random((m, k, 2))
        prev = np.concatenate([pos[:, None], path[:, :-1]], axis=1)
        out_lo = path <= l_a
        out_up = path >= u_a
        inside = ~(out_lo | out_up)
        with np.errstate(over="ignore"):
            q_lo = np.exp(-2.0 * (prev - l_a) * (path - l_a) / dt)
            q_up = np.exp(-2.0 * (u_a - prev) * (u_a - path) / dt)
        br_lo = inside & (v[..., 0] < q_lo)
        br_up = inside & (v[..., 1] < q_up)
        event = out_lo | out_up | br_lo | br_up
        hit = event.any(axis=1)
        if hit.any():
            rows = np.nonzero(hit)[0]
            j = event[rows].argmax(axis=1)
            ol, ou = out_lo[rows, j], out_up[rows, j]
            bl, bu = br_lo[rows, j], br_up[rows, j]
            # both bridges fire: pick a side in proportion to the crossing odds
            both = bl & bu
            ql, qu = q_lo[rows, j], q_up[rows, j]
            bl = bl & (~both | (v[rows, j, 0] * qu < v[rows, j, 1] * ql))
            p0, p1 = prev[rows, j], path[rows, j]
            lr, ur = l_a[rows, 0], u_a[rows, 0]
            frac = np.full(rows.size, 0.5)
            frac[ol] = (p0[ol] - lr[ol]) / (p0[ol] - p1[ol])
            frac[ou] = (ur[ou] - p0[ou]) / (p1[ou] - p0[ou])
            idx = alive[rows]
            times[idx] = t0[rows] + dt * (j + frac)
            exit_lower[idx] = ol | bl
        keep = ~hit
        alive, pos, t0 = alive[keep], path[keep, -1], t0[keep] + k * dt
        l_a, u_a = l_a[keep], u_a[keep]
    return ExitSamples(times, exit_lower)


def default_oracle_dt(p: ExitProblem) -> float:
    """Step for the path oracle: fine against both ``1 / omega`` and the mean exit time.

    Exit times are resolved to within one step, so a step that is a sizable
    fraction of ``E tau`` shows up as a shift of the exit-time law.
    """
    return min(1e-3 / p.omega, 1e-3 * expected_exit_time(p))


def sample_exit_path_oracle(p: ExitProblem, dt: float, rng: np.random.Generator,
                            size: int | None = None):
    if not dt <= 0.01 / p.omega:
        raise ValueError("path oracle needs dt <= 0.01 / omega")
    n = 1 if size is None else size
    s = path_oracle_times(p.omega, np.full(n, p.lower), np.full(n, p.upper),
                          np.full(n, p.start), dt, rng)
    return s[0] if size is None else s
