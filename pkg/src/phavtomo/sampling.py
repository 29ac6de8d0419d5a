"""Monte Carlo phase-averaged quadrature data and phase-randomness diagnostics.

A single-pulse quadrature is ``X_i = sqrt(2) * alpha * cos(phi_i) + delta_i``
with ``delta_i ~ N(0, 1/2)`` (vacuum noise).  How ``phi_i`` is chosen is the
*phase strategy*: ideal uniform randomness, a finite set of phases, or a
linear scan with or without drift, jitter and jumps.

Random streams come from NumPy's counter-based Philox generator keyed by
``(seed, *stream)``, so per-delay streams in the pipeline never overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from phavtomo.errors import ValidationError

RNG_ALGORITHM = "numpy.random.Philox"
TWO_PI = 2.0 * math.pi


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for ``seed``; ``stream`` selects an independent sub-stream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


# -- phase strategies --------------------------------------------------------

@dataclass(frozen=True)
class UniformRandom:
    def phases(self, n, rng):
        return rng.uniform(0.0, TWO_PI, n)


@dataclass(frozen=True)
class FiniteSet:
    """Cycle through ``k`` equispaced phases."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("FiniteSet needs k >= 1")

    def phases(self, n, rng):
        return TWO_PI * (np.arange(n) % self.k) / self.k


@dataclass(frozen=True)
class LinearScan:
    rate: float  # rad/pulse

    def phases(self, n, rng):
        return np.mod(self.rate * np.arange(n), TWO_PI)


@dataclass(frozen=True)
class DriftingScan:
    rate: float
    quadratic_coeff: float  # rad/pulse^2

    def phases(self, n, rng):
        i = np.arange(n, dtype=float)
        return np.mod(self.rate * i + self.quadratic_coeff * i * i, TWO_PI)


@dataclass(frozen=True)
class JitteredScan:
    """Linear scan plus per-pulse Gaussian jitter and persistent random jumps.

    Each pulse triggers a jump with probability ``jump_prob``; a jump shifts
    all later phases by ``+jump_scale`` or ``-jump_scale`` (equal odds).
    """

    rate: float
    jitter_sigma: float = 0.0
    jump_prob: float = 0.0
    jump_scale: float = 0.0

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        if not 0.0 <= self.jump_prob <= 1.0:
            raise ValueError("jump_prob must lie in [0, 1]")

    def phases(self, n, rng):
        base = self.rate * np.arange(n, dtype=float)
        jitter = rng.normal(0.0, self.jitter_sigma, n) if self.jitter_sigma > 0 else 0.0
        hits = rng.random(n) < self.jump_prob
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        offsets = np.cumsum(hits * signs * self.jump_scale)
        return np.mod(base + jitter + offsets, TWO_PI)


PhaseStrategy = Union[UniformRandom, FiniteSet, LinearScan, DriftingScan, JitteredScan]

_STRATEGIES = {
    "uniform": UniformRandom,
    "finite": FiniteSet,
    "linear": LinearScan,
    "drifting": DriftingScan,
    "jittered": JitteredScan,
}


def strategy_from_dict(spec: dict) -> PhaseStrategy:
    """Build a strategy from ``{"variant": name, **params}``."""
    spec = dict(spec)
    name = spec.pop("variant", "uniform")
    try:
        cls = _STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown phase strategy {name!r}; choose from {sorted(_STRATEGIES)}")
    return cls(**spec)


def strategy_to_dict(strategy: PhaseStrategy) -> dict:
    name = {v: k for k, v in _STRATEGIES.items()}[type(strategy)]
    return {"variant": name, **strategy.__dict__}


# -- datasets and histograms -------------------------------------------------

@dataclass(frozen=True)
class QuadratureDataset:
    samples: np.ndarray
    seed: Optional[int] = None
    strategy: PhaseStrategy = field(default_factory=UniformRandom)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("a dataset needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("dataset contains non-finite quadrature values")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


def _validate_sampling(alpha_mag, n):
    if not alpha_mag >= 0:
        raise ValueError(f"alpha_mag must be >= 0, got {alpha_mag}")
    if int(n) != n or n < 1:
        raise ValueError(f"sample count must be a positive integer, got {n}")


def sample_with_strategy(alpha_mag: float, n: int, strategy: PhaseStrategy,
                         seed: int, rng: Optional[np.random.Generator] = None) -> QuadratureDataset:
    """Draw ``n`` single-pulse quadratures with phases chosen by ``strategy``.

    ``rng`` overrides the generator derived from ``seed`` (the seed is still
    recorded on the dataset).
    """
    _validate_sampling(alpha_mag, n)
    n = int(n)
    rng = make_rng(seed) if rng is None else rng
    phi = strategy.phases(n, rng)
    noise = rng.normal(0.0, math.sqrt(0.5), n)
    x = math.sqrt(2.0) * alpha_mag * np.cos(phi) + noise
    return QuadratureDataset(x, seed=seed, strategy=strategy)


def sample_phav(alpha_mag: float, n: int, seed: int,
                rng: Optional[np.random.Generator] = None) -> QuadratureDataset:
    """Phase-averaged coherent-state quadratures with uniformly random phase."""
    return sample_with_strategy(alpha_mag, n, UniformRandom(), seed, rng=rng)


def lag_correlation(data, max_lag: int) -> np.ndarray:
    """Pearson correlation between pulse ``i`` and pulse ``i + k`` for k = 0..max_lag."""
    x = np.asarray(getattr(data, "samples", data), dtype=float)
    if x.size <= max_lag + 1:
        raise ValueError(f"need more than {max_lag + 1} samples for max_lag={max_lag}")
    if np.var(x) == 0.0:
        raise ValidationError("constant dataset: correlation undefined (zero variance)")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        a, b = x[:-k], x[k:]
        if a.std() == 0.0 or b.std() == 0.0:
            raise ValidationError(f"zero variance in lagged window at lag {k}")
        out[k] = np.corrcoef(a, b)[0, 1]
    return out


@dataclass(frozen=True)
class QuadratureHistogram:
    """Density-normalized histogram ``f(X)`` on explicit bin edges."""

    bin_edges: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        freq = np.asarray(self.frequencies, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValidationError("bin edges must be strictly increasing")
        if freq.shape != (edges.size - 1,):
            raise ValidationError("need exactly one frequency per bin")
        if not np.all(np.isfinite(freq)) or np.any(freq < 0):
            raise ValidationError("frequencies must be finite and non-negative")
        total = float(freq @ np.diff(edges))
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"histogram integrates to {total:.12g}, not 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "frequencies", freq)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def weights(self) -> np.ndarray:
        """Probability mass per bin, ``f * dx``."""
        return self.frequencies * self.widths

    @classmethod
    def from_counts(cls, edges, counts) -> "QuadratureHistogram":
        edges = np.asarray(edges, dtype=float)
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise ValueError("histogram has no counts")
        return cls(edges, counts / (total * np.diff(edges)))

    @classmethod
    def from_density(cls, centers, density) -> "QuadratureHistogram":
        """Histogram from density values on equally spaced bin centers (renormalized).

        The (center, density) pairs may come in any order; they are sorted by center.
        """
        centers = np.asarray(centers, dtype=float)
        density = np.asarray(density, dtype=float)
        if centers.shape != density.shape or centers.ndim != 1:
            raise ValidationError("need one density value per bin center")
        order = np.argsort(centers, kind="stable")
        centers, density = centers[order], density[order]
        if centers.size < 2:
            raise ValidationError("need at least two bin centers")
        width = np.diff(centers)
        if not np.allclose(width, width[0], rtol=1e-6, atol=1e-12):
            raise ValidationError("bin centers must be equally spaced")
        h = width[0]
        edges = np.concatenate([centers - 0.5 * h, [centers[-1] + 0.5 * h]])
        return cls.from_counts(edges, density * h)


def histogram(data, bin_width: float = 0.1,
              range: Optional[tuple[float, float]] = None) -> QuadratureHistogram:
    """Density histogram with edges on integer multiples of ``bin_width``.

    Without ``range`` the edges span the data padded by three bins each side;
    with ``range`` samples outside it are dropped.
    """
    if not bin_width > 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    x = np.asarray(getattr(data, "samples", data), dtype=float)
    if x.size == 0:
        raise ValueError("cannot histogram an empty dataset")
    if range is None:
        k_lo = math.floor(x.min() / bin_width) - 3
        k_hi = math.ceil(x.max() / bin_width) + 3
    else:
        k_lo = math.floor(range[0] / bin_width + 1e-9)
        k_hi = math.ceil(range[1] / bin_width - 1e-9)
    edges = np.arange(k_lo, k_hi + 1) * bin_width
    counts, _ = np.histogram(x, bins=edges)
    return QuadratureHistogram.from_counts(edges, counts)


def _cdf_on(h: QuadratureHistogram, grid: np.ndarray) -> np.ndarray:
    cum = np.concatenate([[0.0], np.cumsum(h.weights)])
    return np.interp(grid, h.bin_edges, cum, left=0.0, right=1.0)


def _support(h: QuadratureHistogram):
    occupied = np.flatnonzero(h.frequencies > 0)
    return h.bin_edges[occupied[0]], h.bin_edges[occupied[-1] + 1]


def ks_distance(h1: QuadratureHistogram, h2: QuadratureHistogram) -> float:
    """Sup-norm distance between the two histograms' piecewise-linear CDFs."""
    lo1, hi1 = _support(h1)
    lo2, hi2 = _support(h2)
    if hi1 <= lo2 or hi2 <= lo1:
        raise ValidationError("histograms have disjoint supports")
    grid = np.union1d(h1.bin_edges, h2.bin_edges)
    return float(np.max(np.abs(_cdf_on(h1, grid) - _cdf_on(h2, grid))))


def ks_null_scale(n1: int, n2: Optional[int] = None) -> float:
    """Two-sample KS critical distance at the 1% level, ``1.63 * sqrt(1/n1 + 1/n2)``."""
    n2 = n1 if n2 is None else n2
    return 1.63 * math.sqrt(1.0 / n1 + 1.0 / n2)
