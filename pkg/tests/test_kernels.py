import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from phavtomo import _backend, _kernels_py

needs_compiled = pytest.mark.skipif("cython" not in _backend.BACKENDS,
                                    reason="compiled extension not built")


def test_active_backend_is_known():
    assert _backend.BACKEND in _backend.BACKENDS


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(x=arrays(float, st.integers(1, 40), elements=st.floats(-25, 25)),
       n_max=st.integers(0, 150))
def test_fock_matrix_backends_agree(x, n_max):
    a = _backend.BACKENDS["python"].fock_density_matrix(x, n_max)
    b = _backend.BACKENDS["cython"].fock_density_matrix(x, n_max)
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-15)


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n_max=st.integers(1, 60), bins=st.integers(2, 80),
       iters=st.integers(1, 60))
def test_mle_backends_agree(seed, n_max, bins, iters):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(-10, 10, bins))
    proj = _kernels_py.fock_density_matrix(x, n_max)
    w = rng.random(bins)
    w /= w.sum()
    p0 = np.full(n_max + 1, 1.0 / (n_max + 1))
    pa, la, na, da = _backend.BACKENDS["python"].mle_iterate(proj, w, p0.copy(), iters, 0.0)
    pb, lb, nb, db = _backend.BACKENDS["cython"].mle_iterate(proj, w, p0.copy(), iters, 0.0)
    assert na == nb == iters
    np.testing.assert_allclose(pb, pa, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(lb, la, rtol=1e-12, atol=1e-12)


def test_mle_reports_vanishing_model_density(backend):
    proj = np.array([[1.0, 0.0], [0.0, 0.0]])  # second bin unreachable by any state
    w = np.array([0.5, 0.5])
    with pytest.raises(FloatingPointError, match="bin"):
        _backend.mle_iterate(proj, w, np.array([0.5, 0.5]), 5, 0.0)


def test_mle_early_stop(backend):
    proj = _kernels_py.fock_density_matrix(np.linspace(-4, 4, 81), 3)
    w = proj[0] / proj[0].sum()  # exactly the vacuum density
    p, loglik, n_run, delta = _backend.mle_iterate(proj, w, np.full(4, 0.25), 10_000, 1e-8)
    assert n_run < 10_000
    assert delta < 1e-8
    assert loglik.size == n_run + 1
