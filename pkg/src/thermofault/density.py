"""Temperature distribution features: histograms and Gaussian kernel density.

The classifier input is the estimated probability density of a region's
pixel temperatures, evaluated on a fixed global grid shared by every
sample so that absolute temperature differences stay visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)
BANDWIDTH_FLOOR = 1e-6
_MAX_BINS = 50_000_000

DEFAULT_BIN_ORIGIN = 0.0
DEFAULT_BIN_WIDTH = 1.0


@dataclass(frozen=True)
class TemperatureHistogram:
    """Relative-frequency histogram over uniform temperature bins.

    probs[b] is the fraction of samples falling in
    [bin_origin + b*bin_width, bin_origin + (b+1)*bin_width).
    """

    bin_origin: float
    bin_width: float
    probs: np.ndarray
    n_samples: int

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError("bin width must be positive")
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if (probs < 0).any() or (probs > 1).any():
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {probs.sum()!r}")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def n_bins(self) -> int:
        return int(self.probs.size)

    def bin_edges(self) -> np.ndarray:
        return self.bin_origin + self.bin_width * np.arange(self.n_bins + 1)


def histogram(
    samples, bin_origin: float = DEFAULT_BIN_ORIGIN, bin_width: float = DEFAULT_BIN_WIDTH
) -> TemperatureHistogram:
    """Count samples into uniform bins; bin of t is floor((t - origin) / width)."""
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("histogram requires at least one sample")
    if not np.isfinite(x).all():
        raise ValueError("histogram samples must be finite")
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    idx = np.floor((x - bin_origin) / bin_width).astype(np.int64)
    lo, hi = int(idx.min()), int(idx.max())
    if hi - lo + 1 > _MAX_BINS:
        raise ValueError(f"samples span {hi - lo + 1} bins; narrow the range or widen the bins")
    counts = np.bincount(idx - lo, minlength=hi - lo + 1)
    return TemperatureHistogram(
        bin_origin=bin_origin + lo * bin_width,
        bin_width=bin_width,
        probs=counts / x.size,
        n_samples=int(x.size),
    )


def anchored_histogram(samples, bin_width: float = DEFAULT_BIN_WIDTH) -> TemperatureHistogram:
    """Histogram whose first bin edge sits exactly on the sample minimum.

    interval_probability over the coverage (bin_edges()[0], bin_edges()[-1])
    is exactly 1 for any histogram; with this anchoring the same holds for
    (sample min, sample max) whenever the max does not sit exactly on a bin
    edge (always true for continuous-valued data).
    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("histogram requires at least one sample")
    return histogram(x, bin_origin=float(x.min()), bin_width=bin_width)


def _cumulative_below(h: TemperatureHistogram, t: float) -> float:
    """Total mass of bins whose lower edge lies strictly below t."""
    q = (t - h.bin_origin) / h.bin_width
    n = int(np.clip(math.ceil(q), 0, h.n_bins))
    if n <= 0:
        return 0.0
    return float(h.probs[:n].sum())


def interval_probability(h: TemperatureHistogram, theta: float, theta_prime: float) -> float:
    """Probability mass of the half-open temperature interval (theta, theta_prime].

    Computed as a difference of cumulative masses. Because no mass lies
    below the first bin edge, F(theta, theta') equals
    F(anchor, theta') - F(anchor, theta) bit for bit whenever anchor is at
    or below the histogram origin.
    """
    if theta > theta_prime:
        raise ValueError(f"interval bounds out of order: {theta} > {theta_prime}")
    return _cumulative_below(h, theta_prime) - _cumulative_below(h, theta)


def gaussian_kernel(u):
    """Standard Gaussian kernel: exp(-u^2 / 2) / sqrt(2 pi). Accepts arrays."""
    u = np.asarray(u, dtype=np.float64)
    value = np.exp(-0.5 * np.square(u)) / SQRT_2PI
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class KdeEstimator:
    """Gaussian kernel density estimator with a fixed bandwidth (degrees C)."""

    samples: np.ndarray
    bandwidth: float

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if x.size == 0:
            raise ValueError("KDE requires at least one sample")
        if not np.isfinite(x).all():
            raise ValueError("KDE samples must be finite")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        # canonical order: permuted inputs give bit-identical densities
        x = np.sort(x)
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)


def kde_values(est: KdeEstimator, points) -> np.ndarray:
    """Density estimate at each query point: mean kernel value / bandwidth."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1)
    u = (pts[:, None] - est.samples[None, :]) / est.bandwidth
    k = np.exp(-0.5 * np.square(u)).sum(axis=1) / SQRT_2PI
    return k / (est.n_samples * est.bandwidth)


def kde_at(est: KdeEstimator, x: float) -> float:
    return float(kde_values(est, [x])[0])


def silverman_bandwidth(samples) -> float:
    """Rule-of-thumb bandwidth 1.06 * min(sd, IQR/1.34) * n^(-1/5).

    Uses the sample standard deviation (n-1 denominator) with an
    interquartile-range guard, floored at 1e-6 so degenerate inputs
    (all samples identical) still yield a usable bandwidth.
    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size < 2:
        raise ValueError("bandwidth selection requires at least 2 samples")
    if not np.isfinite(x).all():
        raise ValueError("samples must be finite")
    x = np.sort(x)  # order-independent summation
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    scale = min(sd, (q75 - q25) / 1.34)
    return max(1.06 * scale * x.size ** (-0.2), BANDWIDTH_FLOOR)


@dataclass(frozen=True)
class FeatureGrid:
    """Uniform temperature grid on which densities are discretized."""

    t_lo: float
    t_hi: float
    n_points: int

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValueError(f"grid needs t_lo < t_hi, got [{self.t_lo}, {self.t_hi}]")
        if self.n_points < 2:
            raise ValueError("grid needs at least 2 points")

    @property
    def step(self) -> float:
        return (self.t_hi - self.t_lo) / (self.n_points - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.t_lo, self.t_hi, self.n_points)


DEFAULT_GRID = FeatureGrid(t_lo=-20.0, t_hi=120.0, n_points=128)


@dataclass(frozen=True)
class PdfFeature:
    """Density evaluated on a grid, renormalized to unit mass.

    norm_mass is the rectangle-rule mass of the stored values
    (sum(values) * grid.step); construction normalizes it to 1.
    """

    grid: FeatureGrid
    values: np.ndarray
    bandwidth: float
    norm_mass: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.grid.n_points,):
            raise ValueError("values length must match the grid")
        if (values < 0).any():
            raise ValueError("density values must be non-negative")
        if not math.isclose(self.norm_mass, values.sum() * self.grid.step, rel_tol=1e-9):
            raise ValueError("norm_mass inconsistent with the stored values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def to_dict(self) -> dict:
        return {
            "t_lo": self.grid.t_lo,
            "t_hi": self.grid.t_hi,
            "n_points": self.grid.n_points,
            "values": [float(v) for v in self.values],
            "bandwidth": self.bandwidth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PdfFeature":
        grid = FeatureGrid(float(d["t_lo"]), float(d["t_hi"]), int(d["n_points"]))
        values = np.asarray(d["values"], dtype=np.float64)
        mass = float(values.sum() * grid.step)
        return cls(grid=grid, values=values, bandwidth=float(d["bandwidth"]), norm_mass=mass)


def feature_vector(samples, grid: FeatureGrid = DEFAULT_GRID, bandwidth="auto") -> PdfFeature:
    """KDE of the samples evaluated on the grid and renormalized to unit mass.

    bandwidth may be a positive float or "auto" (Silverman's rule; a lone
    sample falls back to the floor value).
    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("feature extraction requires at least one sample")
    if bandwidth == "auto":
        w = silverman_bandwidth(x) if x.size >= 2 else BANDWIDTH_FLOOR
    else:
        w = float(bandwidth)
        if w <= 0:
            raise ValueError("bandwidth must be positive")
    est = KdeEstimator(x, w)
    raw = kde_values(est, grid.points())
    mass = float(raw.sum() * grid.step)
    if mass <= 0.0:
        raise ValueError(
            f"feature grid [{grid.t_lo}, {grid.t_hi}] does not overlap the sample range"
            f" [{x.min()}, {x.max()}]"
        )
    values = raw / mass
    return PdfFeature(
        grid=grid, values=values, bandwidth=w, norm_mass=float(values.sum() * grid.step)
    )
