import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar
from scipy.special import iv

from phavtomo.errors import TruncationError, ValidationError
from phavtomo.fock import poisson_pmf, total_variation
from phavtomo.states import (Observable, PhononMoments, PhononState, build_fock_density,
                             density_moments, displacement_variance, expectation_via_wigner, fock_moments,
                             fock_wigner, moments, phav_wigner, wigner)

OMEGA = 2 * math.pi * 4.0
STATES = {
    "coherent": PhononState.coherent(2.0),
    "thermal": PhononState.thermal(1.0, 2.0),
    "squeezed": PhononState.squeezed(-0.2, 2.0),
}


def _close(a: PhononMoments, b: PhononMoments, tol):
    assert abs(a.b_mean - b.b_mean) < tol
    assert abs(a.b_sq - b.b_sq) < tol
    assert abs(a.n_mean - b.n_mean) < tol


# -- construction -----------------------------------------------------------------

def test_state_validation():
    with pytest.raises(ValueError):
        PhononState.thermal(-0.1)
    with pytest.raises(ValueError):
        PhononState.coherent(1.0, omega=0.0)
    with pytest.raises(ValueError):
        PhononState.squeezed(2.5)
    with pytest.raises(ValueError):
        PhononState("coherent", n_th=1.0)
    with pytest.raises(ValueError):
        PhononState.squeezed(0.1, operator_order="XY")


def test_default_frequency_is_4_thz():
    assert PhononState.coherent().omega == pytest.approx(OMEGA)


def test_moments_cauchy_schwarz_guard():
    with pytest.raises(ValueError):
        PhononMoments(2.0, 4.0, 3.0)


# -- analytic moments ---------------------------------------------------------------

def test_coherent_moments():
    m = moments(STATES["coherent"], 0.0)
    assert m.b_mean == 2 and m.b_sq == 4 and m.n_mean == 4
    assert moments(STATES["coherent"], math.pi / OMEGA).b_mean == pytest.approx(-2.0)


def test_thermal_moments_against_oracle():
    m = moments(STATES["thermal"], 0.0)
    assert m.n_mean == pytest.approx(5.0) and m.b_mean == pytest.approx(2.0)
    _close(fock_moments(STATES["thermal"], 0.0), m, 1e-6)


@pytest.mark.parametrize("kind", sorted(STATES))
@pytest.mark.parametrize("t", [0.0, 0.05, 0.125])
def test_oracle_equivalence(kind, t):
    _close(fock_moments(STATES[kind], t, dim=60), moments(STATES[kind], t), 1e-6)


@pytest.mark.parametrize("zeta", [0.3, -0.2j, 0.15 + 0.1j])
@pytest.mark.parametrize("order", ["DS", "SD"])
def test_squeezed_phases_and_orders_against_oracle(zeta, order):
    st_ = PhononState.squeezed(zeta, 1.5 - 0.5j, operator_order=order)
    _close(fock_moments(st_, 0.07, dim=60), moments(st_, 0.07), 1e-6)


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-3, 3), im=st.floats(-3, 3), t=st.floats(-5, 5), n_th=st.floats(0, 3))
def test_rotation_covariance(re, im, t, n_th):
    s = PhononState.thermal(n_th, complex(re, im))
    assert moments(s, t).b_mean == moments(s, 0.0).b_mean * np.exp(-1j * s.omega * t)


def test_displacement_variance_examples():
    for t in np.linspace(0, 1, 7):
        assert displacement_variance(STATES["coherent"], t) == pytest.approx(0.5, abs=1e-12)
        assert displacement_variance(STATES["thermal"], t) == pytest.approx(1.5, abs=1e-12)
    assert displacement_variance(STATES["squeezed"], 0.0) == pytest.approx(math.exp(0.4) / 2, abs=1e-12)
    rho = build_fock_density(STATES["squeezed"], 60)
    assert density_moments(rho).q_variance == pytest.approx(math.exp(0.4) / 2, abs=1e-6)


def test_displacement_variance_periodicity():
    t = np.linspace(0, 2 * math.pi / OMEGA, 32, endpoint=False)
    half = math.pi / OMEGA
    sq = PhononState.squeezed(-0.2, 2.0)
    v = np.array([displacement_variance(sq, x) for x in t])
    v_shift = np.array([displacement_variance(sq, x + half) for x in t])
    np.testing.assert_allclose(v_shift, v, atol=1e-9)
    assert np.ptp(v) > 0.1
    v_or = np.array([fock_moments(sq, x).q_variance for x in t[:8]])
    v_or_shift = np.array([fock_moments(sq, x + half).q_variance for x in t[:8]])
    np.testing.assert_allclose(v_or_shift, v_or, atol=1e-6)
    for kind in ("coherent", "thermal"):
        vals = [displacement_variance(STATES[kind], x) for x in t]
        assert np.ptp(vals) < 1e-9


# -- Fock oracle ---------------------------------------------------------------------

def test_coherent_fock_diagonal_is_poisson():
    rho = build_fock_density(STATES["coherent"], 60)
    assert total_variation(np.diag(rho).real, poisson_pmf(4.0, np.arange(60))) < 1e-8


def test_thermal_fock_diagonal_is_geometric():
    rho = build_fock_density(PhononState.thermal(1.0), 60)
    np.testing.assert_allclose(np.diag(rho).real, 0.5 ** (np.arange(60) + 1), atol=1e-9)


@pytest.mark.parametrize("kind", sorted(STATES))
def test_fock_trace_and_hermiticity(kind):
    rho = build_fock_density(STATES[kind], 60)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)


def test_truncation_error():
    with pytest.raises(TruncationError):
        build_fock_density(PhononState.coherent(4.0), 30)


# -- Wigner functions --------------------------------------------------------------------

AX = np.arange(-8.0, 8.0 + 1e-9, 0.05)


def test_vacuum_wigner_peak():
    g = wigner(PhononState.coherent(0.0), 0.0, [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0])
    assert g.values[1, 1] == pytest.approx(1 / math.pi, rel=1e-14)


def test_coherent_wigner_argmax():
    g = wigner(STATES["coherent"], 0.0, AX, AX)
    i, j = np.unravel_index(np.argmax(g.values), g.values.shape)
    assert abs(AX[i] - 2 * math.sqrt(2)) <= 0.05 and abs(AX[j]) <= 0.05


@pytest.mark.parametrize("kind", sorted(STATES))
def test_wigner_normalized(kind):
    beta = abs(STATES[kind].beta)
    ax = np.arange(-(math.sqrt(2) * beta + 5), math.sqrt(2) * beta + 5 + 1e-9, 0.05)
    assert wigner(STATES[kind], 0.1, ax, ax).integral() == pytest.approx(1.0, abs=2e-3)


def test_thermal_wigner_marginals_isotropic():
    g = wigner(PhononState.thermal(1.0), 0.0, AX, AX)
    X, Y = g.mesh()
    assert g.integral(X * X) == pytest.approx(1.5, abs=2e-3)
    assert g.integral(Y * Y) == pytest.approx(1.5, abs=2e-3)


@pytest.mark.parametrize("kind", sorted(STATES))
def test_wigner_matches_fock_parity_oracle(kind):
    st_ = STATES[kind]
    rho = build_fock_density(st_, 60)
    for x, y in [(2.5, 0.3), (0.0, 0.0), (3.1, -1.2)]:
        closed = wigner(st_, 0.0, [x - 1, x], [y - 1, y]).values[1, 1]
        assert fock_wigner(rho, x, y) == pytest.approx(closed, abs=1e-7)


def test_phav_vacuum_equals_vacuum():
    g = phav_wigner(0.0, AX[::10], AX[::10])
    v = wigner(PhononState.coherent(0.0), 0.0, AX[::10], AX[::10])
    np.testing.assert_allclose(g.values, v.values, atol=1e-15)


def test_phav_ring_radius():
    alpha = math.sqrt(13.8)
    r0 = math.sqrt(2) * alpha
    step = 0.05
    r = np.arange(0.0, 12.0, step)
    g = phav_wigner(alpha, r, [-step, 0.0])
    r_grid = r[np.argmax(g.values[:, 1])]
    # unscaled Bessel form, maximized in 1-D
    best = minimize_scalar(lambda x: -np.exp(-x * x - r0 * r0) * iv(0, 2 * x * r0),
                           bounds=(r0 - 1, r0 + 1), method="bounded", options={"xatol": 1e-10})
    # the Bessel factor pulls the maximum inward by about 1/(4 r0) ~ 0.048
    assert abs(best.x - r0) <= step
    assert abs(r_grid - best.x) <= step


@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.7])
def test_phav_equals_phase_average(alpha):
    pts = np.linspace(-6, 6, 13)
    ring = phav_wigner(alpha, pts, pts).values
    phis = (np.arange(64) + 0.5) * 2 * math.pi / 64
    avg = np.mean([wigner(PhononState.coherent(alpha * np.exp(1j * p)), 0.0, pts, pts).values
                   for p in phis], axis=0)
    np.testing.assert_allclose(ring, avg, atol=1e-6)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, math.sqrt(13.8)])
def test_phav_normalized(alpha):
    ext = math.sqrt(2) * alpha + 5
    ax = np.arange(-ext, ext + 1e-9, 0.05)
    assert phav_wigner(alpha, ax, ax).integral() == pytest.approx(1.0, abs=2e-3)


def test_expectations_via_wigner():
    vac = wigner(PhononState.coherent(0.0), 0.0, AX, AX)
    assert expectation_via_wigner(vac, Observable.PHOTON_NUMBER) == pytest.approx(0.0, abs=2e-3)
    assert expectation_via_wigner(vac, "quad_x_squared") == pytest.approx(0.5, abs=2e-3)
    coh = wigner(STATES["coherent"], 0.0, AX, AX)
    assert expectation_via_wigner(coh, "photon_number") == pytest.approx(
        moments(STATES["coherent"], 0.0).n_mean, abs=2e-2)
    assert expectation_via_wigner(coh, "quad_x") == pytest.approx(2 * math.sqrt(2), abs=2e-3)
    ring = phav_wigner(2.0, AX, AX)
    assert expectation_via_wigner(ring, "photon_number") == pytest.approx(4.0, abs=2e-2)


def test_expectation_rejects_unnormalized_grid():
    small = np.linspace(-1, 1, 41)
    with pytest.raises(ValidationError):
        expectation_via_wigner(wigner(PhononState.coherent(0.0), 0.0, small, small), "photon_number")


def test_axes_must_increase():
    with pytest.raises(ValueError):
        wigner(PhononState.coherent(0.0), 0.0, [1.0, 0.0], [0.0, 1.0])
