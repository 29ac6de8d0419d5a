"""Maximum-likelihood photon-number reconstruction from phase-averaged quadrature histograms.

Phase averaging makes the quadrature projector diagonal in the Fock basis,
``<m|Pi(X)|N> = delta_mN |<N|X>|^2``, so the usual ``rho <- N[R rho R]``
iteration reduces to a multiplicative update of the diagonal::

    p_N <- p_N * (sum_b w_b |<N|x_b>|^2 / t_b)^2,   t_b = sum_M p_M |<M|x_b>|^2

followed by renormalization, where ``w_b = f(x_b) dx_b`` is the histogram
mass of bin ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from phavtomo import _backend
from phavtomo.errors import NumericalFailure
from phavtomo.fock import MAX_PHOTON_NUMBER, FockDistribution, fock_density_matrix, fock_quadrature_density
from phavtomo.sampling import QuadratureHistogram


@dataclass(frozen=True)
class TomographyConfig:
    n_max: int = MAX_PHOTON_NUMBER
    iterations: int = 100
    early_stop_delta: float = 1e-8  # max |delta p(N)| per step; 0 disables
    quadrature_support: float = 25.0  # |x| bound for bin centers

    def __post_init__(self):
        if not 1 <= self.n_max <= MAX_PHOTON_NUMBER:
            raise ValueError(f"n_max must lie in [1, {MAX_PHOTON_NUMBER}], got {self.n_max}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.early_stop_delta < 0:
            raise ValueError("early_stop_delta must be >= 0")
        if not self.quadrature_support > 0:
            raise ValueError("quadrature_support must be positive")


@dataclass(frozen=True)
class ReconstructionReport:
    distribution: FockDistribution
    log_likelihood_per_iteration: np.ndarray  # starting point first, then one entry per iterate
    iterations_run: int
    converged: bool
    support_warning: bool

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.probs.tolist(),
            "log_likelihood": self.log_likelihood_per_iteration.tolist(),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "support_warning": self.support_warning,
        }


def phav_projector(n: int, x):
    """Diagonal element ``<n|Pi(x)|n>`` of the phase-averaged quadrature projector.

    Off-diagonal elements vanish identically after phase averaging and are
    never formed.
    """
    return fock_quadrature_density(n, x)


def projector_matrix(centers, n_max: int) -> np.ndarray:
    """``(n_max + 1, len(centers))`` matrix of projector diagonals, computed once per bin grid."""
    return fock_density_matrix(np.asarray(centers, dtype=float), n_max)


def _occupied(hist: QuadratureHistogram):
    order = np.argsort(hist.centers, kind="stable")
    centers = hist.centers[order]
    weights = hist.weights[order]
    keep = weights > 0
    return centers[keep], weights[keep], order[keep]


def support_warning(hist: QuadratureHistogram, n_max: int) -> bool:
    """True when >= 0.1% of the mass sits beyond the turning point of ``|n_max>``."""
    turning = math.sqrt(2.0 * n_max + 1.0)
    return float(hist.weights[np.abs(hist.centers) > turning].sum()) >= 1e-3


def reconstruct(hist: QuadratureHistogram, config: TomographyConfig = TomographyConfig(),
                projector: Optional[np.ndarray] = None) -> ReconstructionReport:
    """Iterate the diagonal MLE update from the uniform distribution.

    Parameters
    ----------
    hist : QuadratureHistogram
        Measured phase-averaged quadrature density.
    config : TomographyConfig
        Truncation, iteration budget and early-stop threshold.
    projector : ndarray, optional
        Precomputed ``projector_matrix(hist.centers, config.n_max)``; pass it
        when many histograms share one bin grid.

    Returns
    -------
    ReconstructionReport
    """
    if hist.frequencies.size == 0 or not np.any(hist.frequencies > 0):
        raise ValueError("histogram is empty")
    centers, weights, idx = _occupied(hist)
    if np.max(np.abs(centers)) > config.quadrature_support:
        raise ValueError(
            f"occupied bins reach |x| = {np.max(np.abs(centers)):.3g}, beyond the "
            f"quadrature support {config.quadrature_support}")
    if projector is None:
        proj = projector_matrix(centers, config.n_max)
    else:
        if projector.shape != (config.n_max + 1, hist.centers.size):
            raise ValueError("projector shape does not match histogram and n_max")
        proj = projector[:, idx]
    weights = weights / weights.sum()
    p0 = np.full(config.n_max + 1, 1.0 / (config.n_max + 1))
    try:
        p, loglik, n_run, last_delta = _backend.mle_iterate(
            proj, weights, p0, config.iterations, config.early_stop_delta)
    except FloatingPointError as exc:
        raise NumericalFailure(f"Tr[Pi(x) rho] <= 0 on an occupied bin: {exc}") from None
    converged = config.early_stop_delta > 0 and last_delta < config.early_stop_delta
    return ReconstructionReport(
        distribution=FockDistribution.normalized(p),
        log_likelihood_per_iteration=loglik,
        iterations_run=int(n_run),
        converged=bool(converged),
        support_warning=support_warning(hist, config.n_max),
    )


def log_likelihood(hist: QuadratureHistogram, d: FockDistribution) -> float:
    """``sum_b f(x_b) dx_b log(sum_N p(N) |<N|x_b>|^2)``."""
    centers, weights, _ = _occupied(hist)
    model = d.probs @ projector_matrix(centers, d.n_max)
    if np.any(model <= 0):
        raise NumericalFailure("model density is zero on an occupied bin (log-likelihood is -inf)")
    return float(weights @ np.log(model))
