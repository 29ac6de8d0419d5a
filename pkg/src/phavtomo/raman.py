"""Probe photon statistics after a Raman interaction with a phonon ensemble.

For a probe mostly polarized along x (amplitude ``alpha_x``) with a weak
orthogonal residual ``alpha_y`` (phase-shifted by -pi/2 through
birefringence), second-order perturbation theory in ``tau_chi`` gives the
residual-channel photon number and variance in terms of the phonon moments::

    N  = alpha_y^2 + tau_chi alpha_y alpha_x sqrt(M) <b^dag + b>
    s2 = N + 4 tau_chi^2 alpha_y^2 alpha_x^2 (M (<b^dag^2>_c + 2<b^dag b>_c + <b^2>_c) + 1)
           + tau_chi^2 alpha_y^2 (2 M <b^dag b>_c + 1)

where ``_c`` marks central moments and ``M`` the number of independent
oscillators probed.  ``form="compact"`` switches to the single-oscillator
variant with a doubled linear coefficient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from phavtomo.errors import NumericalFailure, ValidationError
from phavtomo.states import PhononMoments, PhononState, fock_moments, moments


@dataclass(frozen=True)
class RamanParams:
    """Probe amplitudes and Raman coupling.

    ``form="ensemble"`` uses the M-oscillator expressions (coupling
    ``tau_chi sqrt(M)``); ``form="compact"`` is the single-oscillator shorthand
    whose linear term carries ``2 tau_chi`` instead.
    """

    tau_chi: float
    alpha_x: float
    alpha_y: float
    m_oscillators: float = 1.0
    form: str = "ensemble"

    def __post_init__(self):
        if not self.tau_chi >= 0:
            raise ValueError(f"tau_chi must be >= 0, got {self.tau_chi}")
        if not self.alpha_x >= self.alpha_y >= 0:
            raise ValueError("amplitudes must satisfy alpha_x >= alpha_y >= 0")
        if not self.m_oscillators >= 1:
            raise ValueError("m_oscillators must be >= 1")
        if self.form not in ("ensemble", "compact"):
            raise ValueError("form must be 'ensemble' or 'compact'")

    @classmethod
    def from_probe(cls, alpha_y_sq: float, ratio: float = 100.0, tau_chi: float = 0.0,
                   m_oscillators: float = 1.0, form: str = "ensemble") -> "RamanParams":
        """Build from the residual photon number and the x/y intensity ratio."""
        alpha_y = math.sqrt(alpha_y_sq)
        return cls(tau_chi, alpha_y * math.sqrt(ratio), alpha_y, m_oscillators, form)

    @property
    def coupling(self) -> float:
        """Effective linear coupling multiplying ``<b^dag + b>``."""
        if self.form == "compact":
            return 2.0 * self.tau_chi
        return self.tau_chi * math.sqrt(self.m_oscillators)


def calibrate_tau_chi(alpha_y: float, alpha_x: float, beta_mag: float,
                      m_oscillators: float = 1.0, target_fraction: float = 0.05) -> float:
    """``tau_chi`` giving a peak-to-peak mean modulation of ``target_fraction * alpha_y^2``."""
    if beta_mag <= 0 or alpha_x <= 0 or alpha_y <= 0:
        raise ValueError("calibration needs positive amplitudes and displacement")
    return target_fraction * alpha_y / (4.0 * alpha_x * beta_mag * math.sqrt(m_oscillators))


@dataclass(frozen=True)
class NoiseModel:
    """Detector excess variance ``p2 N^2 + p1 N + p0`` on top of shot noise."""

    p2: float = 0.0
    p1: float = 0.0
    p0: float = 0.0

    def excess(self, mean):
        return self.p2 * mean * mean + self.p1 * mean + self.p0


def mean_photon_number(p: RamanParams, m: PhononMoments) -> float:
    return p.alpha_y ** 2 + p.coupling * p.alpha_y * p.alpha_x * 2.0 * m.b_mean.real


def photon_variance(p: RamanParams, m: PhononMoments) -> float:
    n_osc = p.m_oscillators if p.form == "ensemble" else 1.0
    nc = m.normal_central
    phonon = n_osc * (2.0 * m.anomalous_central.real + 2.0 * nc) + 1.0
    t2 = p.tau_chi ** 2
    var = (mean_photon_number(p, m)
           + 4.0 * t2 * p.alpha_y ** 2 * p.alpha_x ** 2 * phonon
           + t2 * p.alpha_y ** 2 * (2.0 * n_osc * nc + 1.0))
    if var < 0:
        raise NumericalFailure(f"negative photon variance {var:.6g}; moments are not physical")
    return var


def mandel_q(mean: float, variance: float) -> float:
    if not mean > 0:
        raise ValueError(f"Mandel Q needs a positive mean, got {mean}")
    return (variance - mean) / mean


def g2_from_q(q: float, mean: float) -> float:
    """Zero-delay second-order correlation, ``g2 = Q / mean + 1``."""
    if not mean > 0:
        raise ValueError(f"g2 needs a positive mean, got {mean}")
    return q / mean + 1.0


def q_det(mean: float, noise: NoiseModel) -> float:
    """Mandel Q of an ideal coherent probe seen through the noisy detector."""
    if not mean > 0:
        raise ValueError(f"Q_det needs a positive mean, got {mean}")
    return noise.p2 * mean + noise.p1 + noise.p0 / mean


@dataclass(frozen=True)
class NoiseFit:
    model: NoiseModel
    residual_norm: float
    stderr: tuple[float, float, float]  # (p2, p1, p0); nan with only 3 points


def fit_excess_noise(points) -> NoiseFit:
    """Least-squares fit of ``variance - mean`` against ``[mean^2, mean, 1]``.

    ``points`` is an ``(k, 2)`` array of ``(mean, variance)`` pairs.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be an array of (mean, variance) pairs")
    if np.unique(pts[:, 0]).size < 3:
        raise ValidationError("need at least three distinct mean photon numbers")
    mean, var = pts[:, 0], pts[:, 1]
    design = np.column_stack([mean ** 2, mean, np.ones_like(mean)])
    coef, _, rank, _ = np.linalg.lstsq(design, var - mean, rcond=None)
    if rank < 3:
        raise ValidationError("design matrix is rank deficient")
    resid = var - mean - design @ coef
    dof = pts.shape[0] - 3
    if dof > 0:
        sigma2 = float(resid @ resid) / dof
        cov = sigma2 * np.linalg.inv(design.T @ design)
        stderr = tuple(float(s) for s in np.sqrt(np.diag(cov)))
    else:
        stderr = (math.nan,) * 3
    return NoiseFit(NoiseModel(*(float(c) for c in coef)), float(np.linalg.norm(resid)), stderr)


# -- traces ------------------------------------------------------------------

@dataclass(frozen=True)
class PumpProbeTrace:
    delays: np.ndarray  # ps
    mean_n: np.ndarray
    var_n: np.ndarray
    q: np.ndarray
    q_det: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, f), dtype=float) for f in
                  ("delays", "mean_n", "var_n", "q", "q_det")]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise ValueError("trace arrays must be 1-D and of equal length")
        if np.any(arrays[2] < 0):
            raise ValueError("trace variance must be non-negative")
        for name, a in zip(("delays", "mean_n", "var_n", "q", "q_det"), arrays):
            object.__setattr__(self, name, a)

    @property
    def excess(self) -> np.ndarray:
        """``var_n - mean_n``."""
        return self.var_n - self.mean_n

    def __len__(self):
        return self.delays.size


def moments_at(state: PhononState, t: float, source: str = "analytic",
               fock_dim: int = 60) -> PhononMoments:
    """Phonon moments at delay ``t``; before the pump (t < 0) the state is at equilibrium."""
    st = state if t >= 0 else state.equilibrium()
    if source == "analytic":
        return moments(st, t)
    if source == "fock":
        return fock_moments(st, t, fock_dim)
    raise ValueError(f"unknown moment source {source!r}")


def simulate_trace(state: PhononState, params: RamanParams, noise: NoiseModel = NoiseModel(),
                   delays: Sequence[float] = (), include_detector_noise: bool = False,
                   moment_source: str = "analytic", fock_dim: int = 60) -> PumpProbeTrace:
    """Closed-form mean, variance, Q and Q_det of the probe at each pump-probe delay."""
    delays = np.asarray(delays, dtype=float)
    mean = np.empty(delays.size)
    var = np.empty(delays.size)
    for i, t in enumerate(delays):
        m = moments_at(state, float(t), moment_source, fock_dim)
        mean[i] = mean_photon_number(params, m)
        var[i] = photon_variance(params, m)
        if include_detector_noise:
            var[i] += noise.excess(mean[i])
    q = np.array([mandel_q(a, b) for a, b in zip(mean, var)])
    qd = np.array([q_det(a, noise) for a in mean])
    return PumpProbeTrace(delays, mean, var, q, qd)


# -- spectral analysis -------------------------------------------------------

def spectrum(values, delays, positive_only: bool = False):
    """Magnitude spectrum (freq in THz for delays in ps) after detrend, Hann window, 4x zero-pad."""
    values = np.asarray(values, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if values.shape != delays.shape:
        raise ValueError("values and delays must have the same length")
    if positive_only:
        keep = delays > 0
        values, delays = values[keep], delays[keep]
    if delays.size < 16:
        raise ValueError(f"need at least 16 delays for spectral analysis, got {delays.size}")
    step = np.diff(delays)
    if np.any(step <= 0) or not np.allclose(step, step[0], rtol=1e-6, atol=0.0):
        raise ValidationError("delays must be uniformly spaced and increasing")
    centered = values - values.mean()
    n_fft = 4 * centered.size
    mags = np.abs(np.fft.rfft(centered * np.hanning(centered.size), n=n_fft))
    freqs = np.fft.rfftfreq(n_fft, d=float(step[0]))
    return freqs, mags


def dominant_frequency(values, delays, positive_only: bool = False) -> Optional[float]:
    """Frequency (THz) of the strongest non-DC spectral peak, or None without a clear peak."""
    freqs, mags = spectrum(values, delays, positive_only)
    vals = np.asarray(values, dtype=float)
    if np.std(vals) <= 1e-12 * max(1.0, abs(float(np.mean(vals)))):
        return None
    body = mags[1:]
    k = int(np.argmax(body))
    if body[k] < 5.0 * np.median(body):
        return None
    return float(freqs[k + 1])


# -- parameter sweeps --------------------------------------------------------

class SweepAxis(str, enum.Enum):
    PROBE_PHOTONS = "probe_photons"
    PHONON_AMPLITUDE = "phonon_amplitude"
    OSCILLATOR_COUNT = "oscillator_count"


def max_q_over_period(state: PhononState, params: RamanParams, n_points: int = 64) -> float:
    t = np.arange(n_points) * (2.0 * math.pi / state.omega) / n_points
    return float(np.max(simulate_trace(state, params, delays=t).q))


def sweep_max_q(axis, grid, state: PhononState, params: RamanParams,
                noise: NoiseModel = NoiseModel(), n_points: int = 64) -> np.ndarray:
    """Rows of ``(axis_value, max_q_over_period, q_det_reference)`` along one parameter axis.

    * ``probe_photons``: the residual photon number ``alpha_y^2`` takes each grid
      value, ``alpha_x`` stays fixed.
    * ``phonon_amplitude``: ``|beta|`` takes each grid value with ``|beta| tau_chi``
      held at its base value.
    * ``oscillator_count``: ``M`` takes each grid value with ``tau_chi sqrt(M)``
      held at its base value.
    """
    axis = SweepAxis(axis)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("sweep grid is empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("sweep grid must be sorted")
    if n_points < 64:
        raise ValueError("sample at least 64 points per phonon period")
    rows = []
    for v in grid:
        st, pr = state, params
        if axis is SweepAxis.PROBE_PHOTONS:
            pr = replace(params, alpha_y=math.sqrt(v))
        elif axis is SweepAxis.PHONON_AMPLITUDE:
            b0 = abs(state.beta)
            if b0 == 0 or v <= 0:
                raise ValueError("phonon-amplitude sweep needs nonzero base and grid amplitudes")
            st = state.with_beta(state.beta / b0 * v)
            pr = replace(params, tau_chi=params.tau_chi * b0 / v)
        else:
            pr = replace(params, m_oscillators=v,
                         tau_chi=params.tau_chi * math.sqrt(params.m_oscillators / v))
        rows.append((v, max_q_over_period(st, pr, n_points), q_det(pr.alpha_y ** 2, noise)))
    return np.array(rows)


def pump_probe_defaults(kind: str = "coherent", target_fraction: float = 0.05):
    """Phonon state and Raman parameters of the reference pump-probe simulation.

    Residual probe of 2.9 photons, x/y intensity ratio 100, 4 THz mode,
    ``|beta| = 2``, thermal occupation 1 or squeezing -0.2, and ``tau_chi``
    calibrated to a ``target_fraction`` peak-to-peak modulation of the mean.
    """
    state = {
        "coherent": PhononState.coherent(2.0),
        "thermal": PhononState.thermal(1.0, 2.0),
        "squeezed": PhononState.squeezed(-0.2, 2.0),
    }[kind]
    params = RamanParams.from_probe(2.9, 100.0)
    tau = calibrate_tau_chi(params.alpha_y, params.alpha_x, abs(state.beta), 1.0, target_fraction)
    return state, replace(params, tau_chi=tau)
