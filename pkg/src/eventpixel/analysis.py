"""Post-processing of event streams: ISI histograms, summary table, KDE."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.signal import fftconvolve

__all__ = [
    "TRANSITION_CLASSES",
    "IsiHistograms",
    "SummaryTable",
    "isi_histograms",
    "summarize",
    "kde",
    "silverman_bandwidth",
    "DegenerateSampleError",
    "BinnedConditionals",
    "binned_conditionals",
]

TRANSITION_CLASSES = ("on->off", "off->on", "on->on", "off->off")
KDE_POINTS = 512
# above this many samples the KDE is computed by binning and FFT convolution
_EXACT_KDE_MAX = 20_000


class DegenerateSampleError(ValueError):
    """Zero-variance samples with no bandwidth given."""


def _transition_masks(lower: np.ndarray):
    prev, cur = lower[:-1], lower[1:]
    return {
        "on->off": ~prev & cur,
        "off->on": prev & ~cur,
        "on->on": ~prev & ~cur,
        "off->off": prev & cur,
    }


@dataclass
class IsiHistograms:
    """Per-class counts of ``ISI_n`` keyed by the ``(E_{n-1}, E_n)`` transition."""

    edges: np.ndarray
    counts: dict

    @property
    def total(self) -> int:
        return int(sum(int(c.sum()) for c in self.counts.values()))

    def modal_bin(self, cls: str) -> tuple[float, float]:
        c = self.counts[cls]
        i = int(np.argmax(c))
        return float(self.edges[i]), float(self.edges[i + 1])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# bin edges in seconds\n")
            fh.write("class,bin_left,bin_right,count\n")
            for cls in TRANSITION_CLASSES:
                for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts[cls]):
                    fh.write(f"{cls},{float(lo)!r},{float(hi)!r},{int(c)}\n")


def isi_histograms(s, bins_per_decade: int = 10) -> IsiHistograms:
    """Histograms of ``ISI_n`` (n >= 2) on a log axis from ``rho`` to the max ISI.

    With ``rho = 0`` the axis starts at the smallest observed ISI.
    """
    if len(s) < 2:
        raise ValueError("need at least two events")
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    isi = s.isi[1:]
    lo = s.params.rho if s.params.rho > 0 else float(isi.min())
    hi = float(isi.max())
    decades = max(math.log10(hi / lo), 1.0 / bins_per_decade)
    nb = max(1, int(math.ceil(decades * bins_per_decade)))
    edges = lo * 10.0 ** (np.arange(nb + 1) / bins_per_decade)
    edges[-1] = max(edges[-1], hi)
    counts = {cls: np.histogram(isi[m], bins=edges)[0]
              for cls, m in _transition_masks(s.lower).items()}
    return IsiHistograms(edges, counts)


@dataclass(frozen=True)
class SummaryTable:
    n_events: int
    record_time_s: float
    p_on: float
    p_off: float
    p_on_to_off: float
    p_off_to_on: float
    p_on_to_on: float
    p_off_to_off: float
    p_opposite_pairs: float
    r_total: float
    r_on: float
    r_off: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        rows = [
            ("number of events", f"{self.n_events}"),
            ("record time (s)", f"{self.record_time_s:.3f}"),
            ("record time (weeks)", f"{self.record_time_s / 604800.0:.3f}"),
            ("on event probability", f"{self.p_on:.3f}"),
            ("off event probability", f"{self.p_off:.3f}"),
            ("on-to-off probability", f"{self.p_on_to_off:.3f}"),
            ("off-to-on probability", f"{self.p_off_to_on:.3f}"),
            ("on-to-on probability", f"{self.p_on_to_on:.3f}"),
            ("off-to-off probability", f"{self.p_off_to_off:.3f}"),
            ("opposite polarity pairs", f"{self.p_opposite_pairs:.3f}"),
            ("total event rate (ev/s)", f"{self.r_total:.3f}"),
            ("on event rate (ev/s)", f"{self.r_on:.3f}"),
            ("off event rate (ev/s)", f"{self.r_off:.3f}"),
        ]
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{w}}  {v:>12}" for k, v in rows) + "\n"


def summarize(s) -> SummaryTable:
    """Empirical summary statistics of a stream.

    ``p_opposite_pairs`` is the fraction of consecutive pairs with differing
    polarity. Rates use ``N / T_N`` split by the marginal polarity frequencies.
    """
    n = len(s)
    if n < 2:
        raise ValueError("need at least two events")
    lower = s.lower
    p_off = float(np.mean(lower))
    p_on = 1.0 - p_off
    m = _transition_masks(lower)
    from_on = np.sum(~lower[:-1])
    from_off = np.sum(lower[:-1])

    def frac(num, den):
        return float(num) / float(den) if den else float("nan")

    t_end = float(s.timestamps[-1])
    r = n / t_end
    return SummaryTable(
        n_events=n,
        record_time_s=t_end,
        p_on=p_on,
        p_off=p_off,
        p_on_to_off=frac(m["on->off"].sum(), from_on),
        p_off_to_on=frac(m["off->on"].sum(), from_off),
        p_on_to_on=frac(m["on->on"].sum(), from_on),
        p_off_to_off=frac(m["off->off"].sum(), from_off),
        p_opposite_pairs=frac(np.sum(lower[1:] != lower[:-1]), n - 1),
        r_total=r,
        r_on=p_on * r,
        r_off=p_off * r,
    )


def silverman_bandwidth(x: np.ndarray) -> float:
    """``0.9 min(sd, IQR/1.34) n^(-1/5)``, falling back to ``sd`` when IQR is 0."""
    x = np.asarray(x, dtype=float)
    sd = float(np.std(x, ddof=1))
    iqr = float(stats.iqr(x))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * x.size ** -0.2


def kde(samples, bandwidth: float | None = None, points: int = KDE_POINTS):
    """Gaussian KDE on ``points`` grid nodes spanning the sample range +- 3 bandwidths.

    Large samples are binned onto a fine grid with linear weights and
    convolved with the kernel by FFT. Kernel mass beyond the grid ends is
    folded back by rescaling to unit trapezoid mass. Returns ``(grid, density)``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 100:
        raise ValueError("kde needs at least 100 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if bandwidth is None:
        if np.ptp(x) == 0:
            raise DegenerateSampleError("zero-variance samples; pass a bandwidth")
        bandwidth = silverman_bandwidth(x)
    if not bandwidth > 0:
        raise ValueError("bandwidth must be > 0")
    grid = np.linspace(x.min() - 3 * bandwidth, x.max() + 3 * bandwidth, points)
    if x.size <= _EXACT_KDE_MAX:
        dens = np.zeros(points)
        for block in np.array_split(x, max(1, x.size // 2000)):
            u = (grid[:, None] - block[None, :]) / bandwidth
            dens += np.exp(-0.5 * u * u).sum(axis=1)
        return grid, _unit_mass(grid, dens)
    # binned estimate on a 4x finer grid, read back at the output nodes
    fine = 4 * (points - 1) + 1
    fgrid = np.linspace(grid[0], grid[-1], fine)
    h = fgrid[1] - fgrid[0]
    pos = (x - fgrid[0]) / h
    i = np.clip(np.floor(pos).astype(np.int64), 0, fine - 2)
    w = pos - i
    counts = np.bincount(i, weights=1 - w, minlength=fine) + np.bincount(i + 1, weights=w,
                                                                         minlength=fine)
    half = int(math.ceil(5 * bandwidth / h))
    k = np.arange(-half, half + 1) * h / bandwidth
    kern = np.exp(-0.5 * k * k) / (bandwidth * math.sqrt(2 * math.pi))
    dens = fftconvolve(counts, kern, mode="full")[half:half + fine]
    return grid, _unit_mass(grid, np.maximum(dens[::4], 0.0))


def _unit_mass(grid, dens):
    h = grid[1] - grid[0]
    return dens / (h * (dens.sum() - 0.5 * (dens[0] + dens[-1])))


@dataclass
class BinnedConditionals:
    """Stream statistics grouped by the preceding reference voltage."""

    edges: np.ndarray
    count: np.ndarray
    z_mean: np.ndarray
    isi_mean: np.ndarray
    p_on: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# z normalized voltage, isi in seconds\n")
            fh.write("bin_left,bin_right,count,z_mean,isi_mean_s,p_on\n")
            for i in range(len(self.count)):
                vals = (self.edges[i], self.edges[i + 1], self.count[i], self.z_mean[i],
                        self.isi_mean[i], self.p_on[i])
                fh.write(",".join(str(int(v)) if j == 2 else repr(float(v))
                                  for j, v in enumerate(vals)) + "\n")


def binned_conditionals(s, bins: int = 50, central: float = 0.98) -> BinnedConditionals:
    """Equal-count bins of ``Z_{n-1}`` over its central ``central`` mass.

    Per bin: mean ``Z_{n-1}``, mean ``ISI_n`` and on frequency, to be set
    against the conditional curves evaluated at the bin's mean ``z``.
    """
    zb = s.z[:-1]
    q = (1 - central) / 2
    edges = np.quantile(zb, np.linspace(q, 1 - q, bins + 1))
    idx = np.searchsorted(edges, zb, side="right") - 1
    keep = (idx >= 0) & (idx < bins)
    idx = idx[keep]
    count = np.bincount(idx, minlength=bins)
    den = np.maximum(count, 1)
    z_mean = np.bincount(idx, weights=zb[keep], minlength=bins) / den
    isi_mean = np.bincount(idx, weights=s.isi[keep], minlength=bins) / den
    p_on = np.bincount(idx, weights=(~s.lower[keep]).astype(float), minlength=bins) / den
    return BinnedConditionals(edges, count, z_mean, isi_mean, p_on)
