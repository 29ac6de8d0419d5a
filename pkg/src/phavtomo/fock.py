"""Fock-basis primitives: quadrature densities, photon-number laws, thermal occupation.

Quadrature convention throughout the package: ``X = (a e^{i phi} + a^dag e^{-i phi}) / sqrt(2)``,
so the vacuum has quadrature variance 1/2 and ``|<n|X>|^2`` is the squared
normalized Hermite function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln, xlogy

from phavtomo import _backend

#: Boltzmann constant in meV/K.
K_B_MEV = 0.0861733

MAX_PHOTON_NUMBER = 150


@dataclass(frozen=True)
class FockDistribution:
    """Photon-number probabilities p(N) for N = 0..n_max."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size < 2:
            raise ValueError("a Fock distribution needs at least two entries (n_max >= 1)")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum():.12g}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @classmethod
    def normalized(cls, weights) -> "FockDistribution":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())

    @classmethod
    def poisson(cls, mean: float, n_max: int = MAX_PHOTON_NUMBER) -> "FockDistribution":
        """Poisson law truncated at ``n_max`` and renormalized."""
        return cls.normalized(poisson_pmf(mean, np.arange(n_max + 1)))

    @classmethod
    def fock_state(cls, n: int, n_max: int) -> "FockDistribution":
        probs = np.zeros(n_max + 1)
        probs[n] = 1.0
        return cls(probs)


def fock_density_matrix(x, n_max: int) -> np.ndarray:
    """Densities ``|<n|x>|^2`` for all n in 0..n_max, shape ``(n_max + 1, len(x))``.

    Evaluated through the normalized Hermite-function recurrence, so no raw
    Hermite polynomial or factorial is ever formed and n up to 150 is safe.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise ValueError("quadrature values must be finite")
    if not 0 <= n_max <= MAX_PHOTON_NUMBER:
        raise ValueError(f"n_max must lie in [0, {MAX_PHOTON_NUMBER}], got {n_max}")
    return _backend.fock_density_matrix(x.ravel(), int(n_max))


def fock_quadrature_density(n: int, x):
    """Probability density of quadrature ``x`` in the Fock state ``|n>``.

    Parameters
    ----------
    n : int
        Photon number, 0..150.
    x : float or array_like
        Quadrature value(s).

    Returns
    -------
    float or ndarray
        ``H_n(x)^2 exp(-x^2) / (sqrt(pi) 2^n n!)``, same shape as ``x``.
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"photon number must be a non-negative integer, got {n!r}")
    n = int(n)
    xa = np.asarray(x, dtype=float)
    dens = fock_density_matrix(xa.ravel(), n)[n]
    if xa.ndim == 0:
        return float(dens[0])
    return dens.reshape(xa.shape)


def poisson_pmf(mean: float, n):
    """Poisson probability of ``n`` photons at the given mean, evaluated in log space."""
    if not mean >= 0:
        raise ValueError(f"mean photon number must be >= 0, got {mean}")
    n = np.asarray(n)
    logp = xlogy(n, mean) - mean - gammaln(n + 1.0)
    out = np.exp(logp)
    return float(out) if out.ndim == 0 else out


def bose_einstein_occupation(energy_mev: float, temperature_k: float) -> float:
    """Mean occupation ``1 / (exp(E / k_B T) - 1)`` of a bosonic mode."""
    if not energy_mev > 0 or not temperature_k > 0:
        raise ValueError("energy and temperature must both be positive")
    ratio = energy_mev / (K_B_MEV * temperature_k)
    if ratio > 700.0:
        return 0.0
    return 1.0 / math.expm1(ratio)


def effective_temperature(occupation: float, energy_mev: float) -> float:
    """Temperature (K) at which a mode of the given energy has the given mean occupation."""
    if not occupation > 0:
        raise ValueError(f"occupation must be positive, got {occupation}")
    if not energy_mev > 0:
        raise ValueError(f"energy must be positive, got {energy_mev}")
    return energy_mev / (K_B_MEV * math.log1p(1.0 / occupation))


def distribution_stats(d: FockDistribution) -> tuple[float, float, Optional[float]]:
    """Return ``(mean, variance, mandel_q)``; ``mandel_q`` is None for the vacuum."""
    n = np.arange(d.probs.size, dtype=float)
    mean = float(d.probs @ n)
    variance = float(d.probs @ (n * n) - mean * mean)
    q = None if mean == 0.0 else (variance - mean) / mean
    return mean, variance, q


def total_variation(p, q) -> float:
    """Half the L1 distance between two probability vectors (zero-padded to equal length)."""
    p = np.asarray(getattr(p, "probs", p), dtype=float)
    q = np.asarray(getattr(q, "probs", q), dtype=float)
    size = max(p.size, q.size)
    p = np.pad(p, (0, size - p.size))
    q = np.pad(q, (0, size - q.size))
    return 0.5 * float(np.abs(p - q).sum())
