"""Gaussian phonon states: analytic moments, Wigner functions and a truncated-Fock oracle.

Three state families are supported, all displaced by ``beta`` and freely
rotating at ``omega`` (rad/ps):

* coherent  ``D(beta)|0>``
* thermal   ``D(beta) rho_th D(beta)^dag`` with mean thermal occupation ``n_th``
* squeezed  ``D(beta) S(zeta)|0>`` (or ``S(zeta) D(beta)|0>`` with ``operator_order="SD"``)

with ``S(zeta) = exp[(zeta^* b^2 - zeta b^dag^2) / 2]``.  Because every state
is Gaussian, moments and Wigner functions are closed form; ``build_fock_density``
builds the same states by brute force in a truncated Fock space so each
closed-form number has an independent check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import expm
from scipy.special import i0e

from phavtomo.errors import TruncationError, ValidationError

DEFAULT_OMEGA = 2.0 * math.pi * 4.0  # rad/ps, the 4 THz mode


class StateKind(str, enum.Enum):
    COHERENT = "coherent"
    THERMAL = "thermal"
    SQUEEZED = "squeezed"


@dataclass(frozen=True)
class PhononState:
    kind: StateKind
    beta: complex = 0.0
    omega: float = DEFAULT_OMEGA
    n_th: float = 0.0
    zeta: complex = 0.0
    operator_order: str = "DS"

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "zeta", complex(self.zeta))
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.n_th >= 0:
            raise ValueError(f"n_th must be non-negative, got {self.n_th}")
        if abs(self.zeta) > 2.0:
            raise ValueError(f"|zeta| must not exceed 2, got {abs(self.zeta):.3g}")
        if self.operator_order not in ("DS", "SD"):
            raise ValueError("operator_order must be 'DS' or 'SD'")
        if self.kind is not StateKind.THERMAL and self.n_th != 0:
            raise ValueError(f"n_th only applies to thermal states, not {self.kind.value}")
        if self.kind is not StateKind.SQUEEZED and self.zeta != 0:
            raise ValueError(f"zeta only applies to squeezed states, not {self.kind.value}")

    @classmethod
    def coherent(cls, beta=0.0, omega=DEFAULT_OMEGA):
        return cls(StateKind.COHERENT, beta=beta, omega=omega)

    @classmethod
    def thermal(cls, n_th, beta=0.0, omega=DEFAULT_OMEGA):
        return cls(StateKind.THERMAL, beta=beta, omega=omega, n_th=n_th)

    @classmethod
    def squeezed(cls, zeta, beta=0.0, omega=DEFAULT_OMEGA, operator_order="DS"):
        return cls(StateKind.SQUEEZED, beta=beta, omega=omega, zeta=zeta,
                   operator_order=operator_order)

    def equilibrium(self) -> "PhononState":
        """The unpumped state: no displacement, no squeezing, thermal population kept."""
        if self.kind is StateKind.THERMAL:
            return replace(self, beta=0.0)
        return PhononState.coherent(0.0, omega=self.omega)

    def with_beta(self, beta) -> "PhononState":
        return replace(self, beta=beta)


@dataclass(frozen=True)
class PhononMoments:
    """First and second moments ``<b>``, ``<b^2>``, ``<b^dag b>`` at one delay."""

    b_mean: complex
    b_sq: complex
    n_mean: float

    def __post_init__(self):
        if self.n_mean < abs(self.b_mean) ** 2 - 1e-9:
            raise ValueError("moments violate <b^dag b> >= |<b>|^2")

    @property
    def anomalous_central(self) -> complex:
        """``<b^2> - <b>^2``."""
        return self.b_sq - self.b_mean ** 2

    @property
    def normal_central(self) -> float:
        """``<b^dag b> - |<b>|^2``."""
        return self.n_mean - abs(self.b_mean) ** 2

    @property
    def q_variance(self) -> float:
        """Variance of ``q = (b + b^dag)/sqrt(2)``."""
        return self.anomalous_central.real + self.normal_central + 0.5

    @property
    def p_variance(self) -> float:
        return -self.anomalous_central.real + self.normal_central + 0.5

    @property
    def qp_covariance(self) -> float:
        """Symmetrized covariance of q and ``p = (b - b^dag)/(i sqrt(2))``."""
        return self.anomalous_central.imag


def _squeeze_parts(zeta: complex):
    r = abs(zeta)
    return math.cosh(r), math.sinh(r), np.exp(1j * np.angle(zeta))


def moments(state: PhononState, t: float) -> PhononMoments:
    """Moments of ``state`` after free evolution for ``t`` ps under ``H = omega b^dag b``."""
    beta = state.beta
    if state.kind is StateKind.COHERENT:
        mu0, m0, nc = beta, 0j, 0.0
    elif state.kind is StateKind.THERMAL:
        mu0, m0, nc = beta, 0j, float(state.n_th)
    else:
        c, s, e = _squeeze_parts(state.zeta)
        m0, nc = -e * s * c, s * s
        mu0 = beta if state.operator_order == "DS" else beta * c - np.conj(beta) * e * s
    rot = np.exp(-1j * state.omega * t)
    mu = complex(mu0 * rot)
    m = complex(m0 * rot * rot)
    return PhononMoments(b_mean=mu, b_sq=m + mu * mu, n_mean=nc + abs(mu) ** 2)


def displacement_variance(state: PhononState, t: float) -> float:
    """Variance of the phonon displacement ``q = (b + b^dag)/sqrt(2)`` at delay ``t``."""
    return moments(state, t).q_variance


# -- truncated-Fock oracle ---------------------------------------------------

def _annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def required_dim(state: PhononState) -> int:
    excitation = abs(state.beta) ** 2 + state.n_th + math.sinh(abs(state.zeta)) ** 2
    return int(math.ceil(4.0 * excitation + 20.0))


def build_fock_density(state: PhononState, dim: int = 60) -> np.ndarray:
    """Density matrix of ``state`` (at t = 0) in a ``dim``-level Fock space.

    The state is assembled with matrix exponentials in a padded space of
    ``2 * dim`` levels and then projected; a trace deficit above 1e-6 on
    projection raises ``TruncationError``, otherwise the trace is renormalized.
    """
    if dim < required_dim(state):
        raise TruncationError(f"dim={dim} is below the required {required_dim(state)} levels")
    ext = 2 * dim
    a = _annihilation(ext)
    ad = a.conj().T
    disp = expm(state.beta * ad - np.conj(state.beta) * a)
    if state.kind is StateKind.THERMAL:
        n = np.arange(ext, dtype=float)
        nth = state.n_th
        weights = np.zeros(ext)
        weights[0] = 1.0
        if nth > 0:
            weights = np.exp(n * math.log(nth) - (n + 1) * math.log1p(nth))
        rho = disp @ np.diag(weights).astype(complex) @ disp.conj().T
    else:
        psi = np.zeros(ext, dtype=complex)
        psi[0] = 1.0
        if state.kind is StateKind.SQUEEZED:
            z = state.zeta
            sq = expm(0.5 * (np.conj(z) * (a @ a) - z * (ad @ ad)))
            ops = disp @ sq if state.operator_order == "DS" else sq @ disp
            psi = ops @ psi
        else:
            psi = disp @ psi
        rho = np.outer(psi, psi.conj())
    rho = rho[:dim, :dim]
    tr = float(np.trace(rho).real)
    if 1.0 - tr > 1e-6:
        raise TruncationError(f"trace deficit {1.0 - tr:.3g} at dim={dim}")
    return rho / tr


def evolve_density(rho: np.ndarray, omega: float, t: float) -> np.ndarray:
    phase = np.exp(-1j * omega * t * np.arange(rho.shape[0]))
    return phase[:, None] * rho * phase.conj()[None, :]


def density_moments(rho: np.ndarray) -> PhononMoments:
    """Moments computed directly from a truncated density matrix."""
    a = _annihilation(rho.shape[0])
    b_mean = complex(np.trace(rho @ a))
    b_sq = complex(np.trace(rho @ a @ a))
    n_mean = float(np.trace(rho @ a.conj().T @ a).real)
    return PhononMoments(b_mean=b_mean, b_sq=b_sq, n_mean=n_mean)


def fock_moments(state: PhononState, t: float, dim: int = 60) -> PhononMoments:
    """Oracle path for ``moments``: build, rotate and trace in the Fock basis."""
    return density_moments(evolve_density(build_fock_density(state, dim), state.omega, t))


def fock_wigner(rho: np.ndarray, x: float, y: float) -> float:
    """Wigner function of a truncated density matrix at one phase-space point.

    Uses the displaced-parity formula ``W = Tr[D^dag rho D (-1)^n] / pi``; only
    meant as a pointwise oracle for states well inside the truncation.
    """
    dim = rho.shape[0]
    gamma = (x + 1j * y) / math.sqrt(2.0)
    a = _annihilation(dim)
    disp = expm(gamma * a.conj().T - np.conj(gamma) * a)
    shifted = disp.conj().T @ rho @ disp
    parity = (-1.0) ** np.arange(dim)
    return float((np.diag(shifted).real * parity).sum() / math.pi)


# -- Wigner functions --------------------------------------------------------

@dataclass(frozen=True)
class WignerGrid:
    """``values[i, j] = W(x_axis[i], y_axis[j])``."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    values: np.ndarray

    def integral(self, weight=None) -> float:
        vals = self.values if weight is None else self.values * weight
        return float(trapezoid(trapezoid(vals, self.y_axis, axis=1), self.x_axis))

    def mesh(self):
        return np.meshgrid(self.x_axis, self.y_axis, indexing="ij")


def _check_axes(x_axis, y_axis):
    x = np.asarray(x_axis, dtype=float)
    y = np.asarray(y_axis, dtype=float)
    for name, ax in (("x_axis", x), ("y_axis", y)):
        if ax.ndim != 1 or ax.size < 2 or np.any(np.diff(ax) <= 0):
            raise ValueError(f"{name} must be a strictly increasing 1-D array")
    return x, y


def wigner(state: PhononState, t: float, x_axis, y_axis) -> WignerGrid:
    """Closed-form Gaussian Wigner function of ``state`` at delay ``t``."""
    x, y = _check_axes(x_axis, y_axis)
    m = moments(state, t)
    x0 = math.sqrt(2.0) * m.b_mean.real
    y0 = math.sqrt(2.0) * m.b_mean.imag
    vxx, vyy, vxy = m.q_variance, m.p_variance, m.qp_covariance
    det = vxx * vyy - vxy * vxy
    X, Y = np.meshgrid(x - x0, y - y0, indexing="ij")
    quad = (vyy * X * X - 2.0 * vxy * X * Y + vxx * Y * Y) / det
    vals = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
    return WignerGrid(x, y, vals)


def phav_wigner(alpha_mag: float, x_axis, y_axis) -> WignerGrid:
    """Ring-shaped Wigner function of a phase-averaged coherent state of amplitude ``alpha_mag``."""
    if not alpha_mag >= 0:
        raise ValueError(f"alpha_mag must be >= 0, got {alpha_mag}")
    x, y = _check_axes(x_axis, y_axis)
    X, Y = np.meshgrid(x, y, indexing="ij")
    r = np.hypot(X, Y)
    r0 = math.sqrt(2.0) * alpha_mag
    # I0(z) = i0e(z) e^z keeps the large-radius tail finite
    vals = np.exp(-(r - r0) ** 2) * i0e(2.0 * r * r0) / math.pi
    return WignerGrid(x, y, vals)


class Observable(str, enum.Enum):
    PHOTON_NUMBER = "photon_number"
    QUAD_X = "quad_x"
    QUAD_X_SQUARED = "quad_x_squared"


def expectation_via_wigner(grid: WignerGrid, observable) -> float:
    """Phase-space average of an observable's Weyl symbol over a normalized grid."""
    observable = Observable(observable)
    norm = grid.integral()
    if abs(norm - 1.0) > 2e-3:
        raise ValidationError(f"Wigner grid integrates to {norm:.6f}, not 1 (enlarge or refine it)")
    X, Y = grid.mesh()
    if observable is Observable.PHOTON_NUMBER:
        symbol = 0.5 * (X * X + Y * Y - 1.0)
    elif observable is Observable.QUAD_X:
        symbol = X
    else:
        symbol = X * X
    return grid.integral(symbol)
