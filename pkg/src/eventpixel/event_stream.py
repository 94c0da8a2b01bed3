"""Event generation for a single pixel under constant illumination.

The state is the reference voltage ``Z``. Given ``Z_{n-1} = z`` the
normalized voltage restarts at ``z`` and runs until it leaves
``(z - theta_minus, z + theta_plus)``; the side fixes the polarity, the
elapsed time plus the refractory period ``rho`` is the inter-spike
interval, and the new reference is ``Z_n = alpha X + sigma_alpha xi``.

The chain ``Z`` does not depend on the exit durations, so
:func:`simulate_event_stream` runs the chain first and then draws every
duration conditioned on its ``(Z_{n-1}, side)`` in one batch. The chain is
therefore identical to :func:`simulate_reference_chain` for the same seed.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import ou_exit
from .analysis import kde

__all__ = [
    "SigmaAlphaMode",
    "ModelParams",
    "Polarity",
    "Event",
    "EventStream",
    "StationaryStats",
    "simulate_reference_chain",
    "simulate_event_stream",
    "one_step_transition_density",
    "m_step_density_kde",
    "conditional_event_probs",
    "conditional_expected_isi",
    "conditional_expected_z",
    "stationary_stats",
    "polarity_transition_matrix",
    "write_jsonl",
    "read_jsonl",
    "write_csv",
    "read_csv",
]

STREAM_COLUMNS = ("index", "timestamp_s", "polarity", "isi_s", "z_before", "z_after",
                  "exit_position")


class SigmaAlphaMode(str, enum.Enum):
    """How the reference-reset noise scale is computed from ``alpha``.

    ``PAPER_LITERAL`` uses ``sigma_alpha**2 = (1 - alpha**2) / 2``, the value
    behind the published event statistics. ``SDE_CONSISTENT`` uses the
    exact OU transition variance ``(1 - alpha**2) / (2 omega)``.
    """

    PAPER_LITERAL = "paper_literal"
    SDE_CONSISTENT = "sde_consistent"


@dataclass(frozen=True)
class ModelParams:
    """The four effective parameters of the canonical pixel model."""

    omega: float
    rho: float
    theta_minus_tilde: float
    theta_plus_tilde: float
    sigma_alpha_mode: SigmaAlphaMode = SigmaAlphaMode.PAPER_LITERAL

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        for name in ("theta_minus_tilde", "theta_plus_tilde"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        object.__setattr__(self, "sigma_alpha_mode", SigmaAlphaMode(self.sigma_alpha_mode))

    @property
    def alpha(self) -> float:
        return math.exp(-self.omega * self.rho)

    @property
    def sigma_alpha(self) -> float:
        var = -math.expm1(-2.0 * self.omega * self.rho) / 2.0
        if self.sigma_alpha_mode is SigmaAlphaMode.SDE_CONSISTENT:
            var /= self.omega
        return math.sqrt(var)

    def mirrored(self) -> "ModelParams":
        """Same model with the two thresholds swapped."""
        return ModelParams(self.omega, self.rho, self.theta_plus_tilde,
                           self.theta_minus_tilde, self.sigma_alpha_mode)

    def exit_problem(self, z: float) -> ou_exit.ExitProblem:
        return ou_exit.ExitProblem(self.omega, z - self.theta_minus_tilde,
                                   z + self.theta_plus_tilde, z)


class Polarity(enum.IntEnum):
    OFF = -1
    ON = 1


@dataclass(frozen=True)
class Event:
    index: int
    timestamp: float
    polarity: Polarity
    isi: float
    z_before: float
    z_after: float
    exit_position: float


@dataclass
class EventStream:
    """Events ``1..N`` stored column-wise.

    ``z`` holds ``Z_0..Z_N``; ``lower[n-1]`` is True when event ``n`` is an
    off event; ``xi`` are the normal draws of the reference reset, so that
    ``z[n] == alpha * exit_position[n-1] + sigma_alpha * xi[n-1]``.
    """

    params: ModelParams
    seed: int | None
    start: float
    z: np.ndarray
    lower: np.ndarray
    isi: np.ndarray
    xi: np.ndarray

    def __len__(self):
        return len(self.isi)

    @property
    def timestamps(self) -> np.ndarray:
        return np.cumsum(self.isi)

    @property
    def polarity(self) -> np.ndarray:
        return np.where(self.lower, int(Polarity.OFF), int(Polarity.ON))

    @property
    def exit_position(self) -> np.ndarray:
        zb = self.z[:-1]
        return np.where(self.lower, zb - self.params.theta_minus_tilde,
                        zb + self.params.theta_plus_tilde)

    @property
    def tau(self) -> np.ndarray:
        return self.isi - self.params.rho

    def __getitem__(self, i) -> Event:
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return Event(
            index=i + 1,
            timestamp=float(self.timestamps[i]),
            polarity=Polarity.OFF if self.lower[i] else Polarity.ON,
            isi=float(self.isi[i]),
            z_before=float(self.z[i]),
            z_after=float(self.z[i + 1]),
            exit_position=float(self.exit_position[i]),
        )

    def __iter__(self):
        t = self.timestamps
        xe = self.exit_position
        for i in range(len(self)):
            yield Event(i + 1, float(t[i]), Polarity.OFF if self.lower[i] else Polarity.ON,
                        float(self.isi[i]), float(self.z[i]), float(self.z[i + 1]),
                        float(xe[i]))


# --------------------------------------------------------------------------
# conditionals given the previous reference voltage


def conditional_event_probs(p: ModelParams, z):
    """``(p_off, p_on)`` for the next event given ``Z_{n-1} = z``."""
    z = np.asarray(z, dtype=float)
    return ou_exit.side_probs(p.omega, z - p.theta_minus_tilde, z + p.theta_plus_tilde, z)


def conditional_expected_isi(p: ModelParams, z):
    z = np.asarray(z, dtype=float)
    tau = ou_exit.mean_exit_time(p.omega, z - p.theta_minus_tilde, z + p.theta_plus_tilde, z)
    return p.rho + tau


def conditional_expected_z(p: ModelParams, z):
    """``E(Z_n | Z_{n-1} = z) = alpha (z - theta_minus p_off + theta_plus p_on)``."""
    z = np.asarray(z, dtype=float)
    p_off, p_on = conditional_event_probs(p, z)
    out = p.alpha * (z - p.theta_minus_tilde * np.asarray(p_off)
                     + p.theta_plus_tilde * np.asarray(p_on))
    return float(out) if out.ndim == 0 else out


def one_step_transition_density(p: ModelParams, z, z_prime):
    """Density of ``Z_n`` at ``z_prime`` given ``Z_{n-1} = z``.

    A two-component normal mixture centred at ``alpha * l`` and
    ``alpha * u``. Undefined for ``rho = 0`` where the reset is exact.
    """
    s = p.sigma_alpha
    if s == 0:
        raise ValueError("rho = 0 gives a degenerate (atomic) transition law")
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    p_off, p_on = conditional_event_probs(p, z)
    lo = p.alpha * (z - p.theta_minus_tilde)
    up = p.alpha * (z + p.theta_plus_tilde)
    out = (np.asarray(p_off) * _phi((zp - lo) / s) + np.asarray(p_on) * _phi((zp - up) / s)) / s
    return float(out) if out.ndim == 0 else out


def _phi(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


# --------------------------------------------------------------------------
# chain simulation


def _prob_lower_scalar(sw, tm, tp, z):
    # scalar twin of ou_exit.side_probs for the serial chain loop
    a, b, c = sw * (z + tp), sw * z, sw * (z - tm)
    a2, b2, c2 = a * a, b * b, c * c
    m = max(a2, b2, c2)
    ea = math.exp(a2 - m) * special.dawsn(a)
    eb = math.exp(b2 - m) * special.dawsn(b)
    ec = math.exp(c2 - m) * special.dawsn(c)
    p_lo = (ea - eb) / (ea - ec)
    p_up = (ec - eb) / (ec - ea)
    if p_lo <= p_up:
        return min(max(p_lo, 0.0), 1.0)
    return 1.0 - min(max(p_up, 0.0), 1.0)


def _run_chain(p: ModelParams, start: float, n: int, rng: np.random.Generator):
    if n < 1:
        raise ValueError("n must be >= 1")
    if not math.isfinite(start):
        raise ValueError("start must be finite")
    u = rng.random(n)
    xi = rng.standard_normal(n)
    noise = p.sigma_alpha * xi
    alpha = p.alpha
    sw = math.sqrt(p.omega)
    tm, tp = p.theta_minus_tilde, p.theta_plus_tilde
    z = np.empty(n + 1)
    lower = np.empty(n, dtype=bool)
    zk = float(start)
    z[0] = zk
    for k in range(n):
        lo = u[k] < _prob_lower_scalar(sw, tm, tp, zk)
        lower[k] = lo
        x_exit = zk - tm if lo else zk + tp
        zk = alpha * x_exit + noise[k]
        z[k + 1] = zk
    return z, lower, xi


def simulate_reference_chain(p: ModelParams, start: float, n: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Reference voltages ``Z_0 = start, Z_1, ..., Z_n`` without exit times.

    All ``n`` uniforms for the side draws come first from ``rng``, then the
    ``n`` normals of the resets.
    """
    z, _, _ = _run_chain(p, start, n, rng)
    return z


def simulate_event_stream(p: ModelParams, start: float, n: int, rng: np.random.Generator,
                          *, sampler: str = "pathfree",
                          cache: ou_exit.ExitTimeCache | None = None,
                          oracle_dt: float | None = None,
                          seed: int | None = None) -> EventStream:
    """Simulate ``n`` events starting from reference ``start`` at ``T_0 = 0``.

    ``sampler="pathfree"`` draws each exit duration from the numerically
    solved conditional law (tables shared through ``cache``). The
    ``"oracle"`` sampler simulates each exit by fine-step paths with a
    bridge correction, drawing side and duration jointly; it is slow and is
    meant for cross-checks on short streams.
    """
    if sampler == "pathfree":
        z, lower, xi = _run_chain(p, start, n, rng)
        if cache is None:
            cache = ou_exit.ExitTimeCache(p.omega, p.theta_minus_tilde, p.theta_plus_tilde)
        elif (cache.omega, cache.theta_minus, cache.theta_plus) != (
                p.omega, p.theta_minus_tilde, p.theta_plus_tilde):
            raise ValueError("cache was built for different model parameters")
        tau = cache.sample_times(z[:-1], lower, rng)
    elif sampler == "oracle":
        z, lower, xi, tau = _run_oracle(p, start, n, rng, oracle_dt)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    return EventStream(p, seed, float(start), z, lower, tau + p.rho, xi)


def _run_oracle(p, start, n, rng, dt):
    if n < 1:
        raise ValueError("n must be >= 1")
    dt = 1e-3 / p.omega if dt is None else dt
    alpha, s = p.alpha, p.sigma_alpha
    z = np.empty(n + 1)
    z[0] = start
    lower = np.empty(n, dtype=bool)
    tau = np.empty(n)
    xi = np.empty(n)
    for k in range(n):
        zk = z[k]
        res = ou_exit.path_oracle_times(p.omega, zk - p.theta_minus_tilde,
                                        zk + p.theta_plus_tilde, zk, dt, rng)
        lo = bool(res.lower[0])
        lower[k], tau[k] = lo, res.times[0]
        xi[k] = rng.standard_normal()
        x_exit = zk - p.theta_minus_tilde if lo else zk + p.theta_plus_tilde
        z[k + 1] = alpha * x_exit + s * xi[k]
    return z, lower, xi, tau


# --------------------------------------------------------------------------
# m-step densities and stationary statistics


def _chain_batch(p: ModelParams, start: float, steps: int, size: int, seed):
    # all replicas advanced together; records Z_0..Z_steps
    rng = np.random.default_rng(seed)
    zs = np.full(size, float(start))
    out = np.empty((steps + 1, size))
    out[0] = zs
    for k in range(1, steps + 1):
        p_off, _ = conditional_event_probs(p, zs)
        lo = rng.random(size) < p_off
        x_exit = np.where(lo, zs - p.theta_minus_tilde, zs + p.theta_plus_tilde)
        zs = p.alpha * x_exit + p.sigma_alpha * rng.standard_normal(size)
        out[k] = zs
    return out


def m_step_density_kde(p: ModelParams, z: float, m_list, replicas: int,
                       rng: np.random.Generator, *, chunk: int = 50_000,
                       workers: int | None = None, point_bandwidth: float = 1e-2):
    """Kernel density estimates of ``Z_m`` given ``Z_0 = z`` for each ``m``.

    Replicas are split into fixed chunks, each with its own child seed, so
    the result does not depend on ``workers``. For ``m = 0`` every sample
    equals ``z`` and the curve is a narrow bump of width ``point_bandwidth``.
    Returns ``{m: (grid, density)}``.
    """
    if replicas < 10_000:
        raise ValueError("replicas must be >= 10000")
    ms = sorted({int(m) for m in m_list})
    if not ms or ms[0] < 0:
        raise ValueError("m_list must hold nonnegative integers")
    steps = ms[-1]
    sizes = [chunk] * (replicas // chunk) + ([replicas % chunk] if replicas % chunk else [])
    seeds = np.random.SeedSequence(int(rng.integers(2**63))).spawn(len(sizes))

    def run(i):
        return _chain_batch(p, z, steps, sizes[i], seeds[i])[ms]

    if workers is None or workers <= 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    samples = np.concatenate(parts, axis=1)
    out = {}
    for row, m in zip(samples, ms):
        bw = point_bandwidth if np.ptp(row) == 0 else None
        out[m] = kde(row, bandwidth=bw)
    return out


@dataclass(frozen=True)
class StationaryStats:
    pi_off: float
    pi_on: float
    mean_isi: float
    r_total: float
    r_on: float
    r_off: float


def stationary_stats(p: ModelParams, rng: np.random.Generator, *, burn_in: int = 10_000,
                     samples: int = 100_000, start: float = 0.0) -> StationaryStats:
    """Long-run polarity probabilities and event rates.

    Averages the conditional probabilities and expected ISIs over chain
    states after ``burn_in`` steps, which has lower variance than counting
    events in a simulated stream.
    """
    if burn_in < 1000:
        raise ValueError("burn_in must be >= 1000")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    z = simulate_reference_chain(p, start, burn_in + samples, rng)[burn_in + 1:]
    _, p_on = conditional_event_probs(p, z)
    pi_on = float(np.mean(p_on))
    pi_off = 1.0 - pi_on
    mean_isi = float(np.mean(conditional_expected_isi(p, z)))
    r = 1.0 / mean_isi
    return StationaryStats(pi_off, pi_on, mean_isi, r, pi_on * r, pi_off * r)


def polarity_transition_matrix(s: EventStream) -> np.ndarray:
    """Empirical ``P(E_n = j | E_{n-1} = i)``; rows and columns ordered (on, off)."""
    if len(s) < 2:
        raise ValueError("need at least two events")
    prev, cur = s.lower[:-1], s.lower[1:]
    counts = np.array([[np.sum(~prev & ~cur), np.sum(~prev & cur)],
                       [np.sum(prev & ~cur), np.sum(prev & cur)]], dtype=float)
    rows = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        return np.where(rows > 0, counts / np.where(rows > 0, rows, 1.0), np.nan)


# --------------------------------------------------------------------------
# serialization


def _header(s: EventStream) -> dict:
    p = s.params
    return {
        "omega_rad_s": p.omega,
        "rho_s": p.rho,
        "theta_minus_tilde": p.theta_minus_tilde,
        "theta_plus_tilde": p.theta_plus_tilde,
        "sigma_alpha_mode": p.sigma_alpha_mode.value,
        "start": s.start,
        "seed": s.seed,
    }


def _rows(s: EventStream):
    t = s.timestamps
    xe = s.exit_position
    pol = s.polarity
    for i in range(len(s)):
        yield (i + 1, float(t[i]), "on" if pol[i] > 0 else "off", float(s.isi[i]),
               float(s.z[i]), float(s.z[i + 1]), float(xe[i]))


def write_jsonl(s: EventStream, path) -> None:
    """First line ``{"header": {...}}``, then one JSON object per event."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"header": _header(s)}) + "\n")
        for row in _rows(s):
            fh.write(json.dumps(dict(zip(STREAM_COLUMNS, row))) + "\n")


def write_csv(s: EventStream, path) -> None:
    """CSV with a ``# {...}`` header comment carrying params and seed."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(_header(s)) + "\n")
        fh.write("# units: timestamp_s and isi_s in seconds; voltages normalized\n")
        fh.write(",".join(STREAM_COLUMNS) + "\n")
        for row in _rows(s):
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _from_records(header: dict, records: list) -> EventStream:
    p = ModelParams(header["omega_rad_s"], header["rho_s"], header["theta_minus_tilde"],
                    header["theta_plus_tilde"], SigmaAlphaMode(header["sigma_alpha_mode"]))
    n = len(records)
    z = np.empty(n + 1)
    z[0] = header["start"] if n == 0 else records[0]["z_before"]
    lower = np.empty(n, dtype=bool)
    isi = np.empty(n)
    xe = np.empty(n)
    for i, r in enumerate(records):
        z[i + 1] = r["z_after"]
        lower[i] = r["polarity"] == "off"
        isi[i] = r["isi_s"]
        xe[i] = r["exit_position"]
    s_a = p.sigma_alpha
    xi = (z[1:] - p.alpha * xe) / s_a if s_a > 0 else np.zeros(n)
    return EventStream(p, header["seed"], header["start"], z, lower, isi, xi)


def read_jsonl(path) -> EventStream:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())["header"]
        records = [json.loads(line) for line in fh if line.strip()]
    return _from_records(header, records)


def read_csv(path) -> EventStream:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = json.loads(lines[0][2:])
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    cols = body[0].split(",")
    records = []
    for ln in body[1:]:
        vals = dict(zip(cols, ln.split(",")))
        records.append({k: (vals[k] if k == "polarity" else float(vals[k]))
                        for k in STREAM_COLUMNS})
    return _from_records(header, records)
