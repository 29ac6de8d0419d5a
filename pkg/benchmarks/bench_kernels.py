"""Compare the compiled and NumPy kernel backends on tomography-sized inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints median wall time per kernel and backend, plus the largest elementwise
difference between backends.
"""

import argparse
import statistics
import time

import numpy as np

from phavtomo._backend import BACKENDS


def _time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-max", type=int, default=150)
    ap.add_argument("--bins", type=int, default=500)
    ap.add_argument("--iterations", type=int, default=100)
    args = ap.parse_args()

    if "cython" not in BACKENDS:
        print("compiled backend not built; only the NumPy backend is available")
    x = np.linspace(-25.0, 25.0, args.bins)
    rng = np.random.default_rng(0)
    cases = {
        "fock_density_matrix": lambda k: (lambda: k.fock_density_matrix(x, args.n_max)),
    }
    results = {}
    for name, make in cases.items():
        for backend, k in BACKENDS.items():
            results[(name, backend)] = _time(make(k), args.repeat)

    proj = BACKENDS["python"].fock_density_matrix(x, args.n_max)
    occupied = np.abs(x) < 8.0
    proj = proj[:, occupied]
    w = rng.random(proj.shape[1])
    w /= w.sum()
    p0 = np.full(args.n_max + 1, 1.0 / (args.n_max + 1))
    for backend, k in BACKENDS.items():
        results[("mle_iterate", backend)] = _time(
            lambda k=k: k.mle_iterate(proj, w, p0.copy(), args.iterations, 0.0)[0], args.repeat)

    print(f"{'kernel':<22}{'backend':<10}{'median ms':>12}{'max |diff|':>14}")
    for name in ("fock_density_matrix", "mle_iterate"):
        ref = results[(name, "python")][1]
        for backend in BACKENDS:
            t, out = results[(name, backend)]
            diff = float(np.max(np.abs(np.asarray(out) - ref)))
            print(f"{name:<22}{backend:<10}{1e3 * t:>12.3f}{diff:>14.2e}")


if __name__ == "__main__":
    main()
