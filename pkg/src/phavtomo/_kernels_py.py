"""Pure-NumPy versions of the hot kernels.

Signatures and results match ``_kernels.pyx`` to rounding; this module is
what gets used when the compiled extension is missing or disabled.
"""

import numpy as np

_PI_QUARTER = np.pi ** -0.25


def fock_density_matrix(x, n_max):
    """|<n|x>|^2 for n = 0..n_max at every point of ``x``, shape (n_max+1, len(x))."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((n_max + 1, x.size))
    prev2 = np.zeros_like(x)
    prev = _PI_QUARTER * np.exp(-0.5 * x * x)
    out[0] = prev * prev
    for n in range(1, n_max + 1):
        cur = x * np.sqrt(2.0 / n) * prev - np.sqrt((n - 1.0) / n) * prev2
        out[n] = cur * cur
        prev2, prev = prev, cur
    return out


def mle_iterate(proj, weights, p, iterations, tol):
    """Run the diagonal R-rho-R update in place on a copy of ``p``.

    Returns ``(p, loglik, n_run, last_delta)`` where ``loglik`` holds the
    log-likelihood of the starting point and of every iterate.  Raises
    FloatingPointError when the model density vanishes on an occupied bin.
    """
    proj = np.ascontiguousarray(proj, dtype=np.float64)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    p = np.array(p, dtype=np.float64)
    loglik = np.empty(iterations + 1)
    last_delta = np.inf
    n_run = 0
    for _ in range(iterations):
        t = p @ proj
        if np.any(t <= 0.0):
            raise FloatingPointError(f"model density vanished at bin {int(np.argmax(t <= 0.0))}")
        loglik[n_run] = w @ np.log(t)
        r = proj @ (w / t)
        p_new = p * r * r
        p_new /= p_new.sum()
        last_delta = float(np.max(np.abs(p_new - p)))
        p = p_new
        n_run += 1
        if tol > 0.0 and last_delta < tol:
            break
    t = p @ proj
    if np.any(t <= 0.0):
        raise FloatingPointError(f"model density vanished at bin {int(np.argmax(t <= 0.0))}")
    loglik[n_run] = w @ np.log(t)
    return p, loglik[: n_run + 1].copy(), n_run, last_delta
