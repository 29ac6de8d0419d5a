# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Fock-state quadrature densities and the diagonal MLE iteration."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, M_PI

cnp.import_array()


def fock_density_matrix(x, int n_max):
    """|<n|x>|^2 for n = 0..n_max at every point of ``x``, shape (n_max+1, len(x))."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0]
    out = np.empty((n_max + 1, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double c0 = M_PI ** -0.25
    cdef double xi, prev, prev2, cur
    cdef Py_ssize_t j
    cdef int n
    # column-wise so each point's recurrence stays in registers
    with nogil:
        for j in range(m):
            xi = xv[j]
            prev2 = 0.0
            prev = c0 * exp(-0.5 * xi * xi)
            ov[0, j] = prev * prev
            for n in range(1, n_max + 1):
                cur = xi * sqrt(2.0 / n) * prev - sqrt((n - 1.0) / n) * prev2
                ov[n, j] = cur * cur
                prev2 = prev
                prev = cur
    return out


cdef int _model_density(const double[:, ::1] proj, const double[::1] p,
                        double[::1] t) noexcept nogil:
    cdef Py_ssize_t k, b
    cdef Py_ssize_t nk = proj.shape[0], nb = proj.shape[1]
    for b in range(nb):
        t[b] = 0.0
    for k in range(nk):
        for b in range(nb):
            t[b] += p[k] * proj[k, b]
    for b in range(nb):
        if t[b] <= 0.0:
            return <int>b
    return -1


def mle_iterate(proj, weights, p, int iterations, double tol):
    """Run the diagonal R-rho-R update; see the NumPy twin for the contract."""
    cdef const double[:, ::1] pv = np.ascontiguousarray(proj, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cur_arr = np.array(p, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef Py_ssize_t nk = pv.shape[0], nb = pv.shape[1]
    cdef double[::1] t = np.empty(nb)
    cdef double[::1] r = np.empty(nk)
    loglik_arr = np.empty(iterations + 1)
    cdef double[::1] loglik = loglik_arr
    cdef double ll, acc, total, delta, last_delta = np.inf, v
    cdef Py_ssize_t k, b
    cdef int n_run = 0, it, bad = -1

    with nogil:
        for it in range(iterations):
            bad = _model_density(pv, cur, t)
            if bad >= 0:
                break
            ll = 0.0
            for b in range(nb):
                ll += w[b] * log(t[b])
                t[b] = w[b] / t[b]
            loglik[n_run] = ll
            total = 0.0
            for k in range(nk):
                acc = 0.0
                for b in range(nb):
                    acc += pv[k, b] * t[b]
                r[k] = cur[k] * acc * acc
                total += r[k]
            delta = 0.0
            for k in range(nk):
                v = r[k] / total
                if fabs(v - cur[k]) > delta:
                    delta = fabs(v - cur[k])
                cur[k] = v
            last_delta = delta
            n_run += 1
            if tol > 0.0 and delta < tol:
                break
        if bad < 0:
            bad = _model_density(pv, cur, t)
            if bad < 0:
                ll = 0.0
                for b in range(nb):
                    ll += w[b] * log(t[b])
                loglik[n_run] = ll
    if bad >= 0:
        raise FloatingPointError(f"model density vanished at bin {bad}")
    return cur_arr, loglik_arr[: n_run + 1].copy(), n_run, last_delta
