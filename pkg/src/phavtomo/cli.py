"""Command-line interface: ``phavtomo <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 input validation error, 3 numerical
failure.  Data goes to files (or stdout for small JSON summaries); diagnostics
go to stderr.  Every run emits a metadata block with the tool version, seed and
an echo of the effective options.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from phavtomo import __version__, _backend, io, pipeline
from phavtomo.errors import NumericalFailure, ValidationError
from phavtomo.fock import (bose_einstein_occupation, distribution_stats,
                           effective_temperature, poisson_pmf, total_variation)
from phavtomo.raman import (NoiseModel, RamanParams, SweepAxis, calibrate_tau_chi,
                            dominant_frequency, fit_excess_noise, g2_from_q, simulate_trace,
                            spectrum, sweep_max_q)
from phavtomo.sampling import (RNG_ALGORITHM, histogram, ks_distance, ks_null_scale,
                               lag_correlation, make_rng, sample_phav, sample_with_strategy,
                               strategy_from_dict, strategy_to_dict)
from phavtomo.states import PhononState, phav_wigner, wigner
from phavtomo.tomography import TomographyConfig, reconstruct

UNITS = ("units: quadratures X in vacuum units (vacuum variance 1/2); photon numbers in "
         "photons/pulse; delays in ps; frequencies in THz; energies in meV; temperatures in K")

OCCUPATION_NOTE = ("occupation = 1/(exp(E/k_B T) - 1) with k_B = 0.0861733 meV/K; for 16.5 meV at 300 K this gives "
                   "1.12, not the 0.7 sometimes quoted for this mode")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is None:
        args.seed = int(np.random.SeedSequence().entropy % (2 ** 32))
        print(f"no --seed given; using generated seed {args.seed}", file=sys.stderr)
    return args.seed


def _metadata(args, **extra) -> dict:
    echo = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {"tool": "phavtomo", "version": __version__, "kernel_backend": _backend.BACKEND,
            "seed": getattr(args, "seed", None), "command": args.command, "options": echo, **extra}


def _sidecar(out_path, meta):
    io.write_json(f"{out_path}.meta.json", meta)


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=io._json_default)
    if out:
        io.write_json(out, obj)
    else:
        print(text)


# -- shared option groups ---------------------------------------------------------

def _add_strategy(p):
    g = p.add_argument_group("phase strategy")
    g.add_argument("--strategy", default="uniform",
                   choices=["uniform", "finite", "linear", "drifting", "jittered"],
                   help="how the optical phase of each pulse is chosen")
    g.add_argument("--k", type=int, default=8, help="number of phases for 'finite'")
    g.add_argument("--rate", type=float, default=None,
                   help="scan rate in rad/pulse (default: 2*pi*golden ratio)")
    g.add_argument("--quadratic", type=float, default=1e-7, help="drift coefficient in rad/pulse^2")
    g.add_argument("--jitter", type=float, default=0.05, help="per-pulse Gaussian jitter sigma in rad")
    g.add_argument("--jump-prob", type=float, default=1e-3, help="per-pulse probability of a phase jump")
    g.add_argument("--jump-scale", type=float, default=math.pi / 2, help="phase jump size in rad")


def _strategy(args):
    rate = args.rate if args.rate is not None else 2.0 * math.pi * (math.sqrt(5.0) - 1.0) / 2.0
    spec = {"variant": args.strategy}
    if args.strategy == "finite":
        spec["k"] = args.k
    elif args.strategy == "linear":
        spec["rate"] = rate
    elif args.strategy == "drifting":
        spec.update(rate=rate, quadratic_coeff=args.quadratic)
    elif args.strategy == "jittered":
        spec.update(rate=rate, jitter_sigma=args.jitter, jump_prob=args.jump_prob,
                    jump_scale=args.jump_scale)
    return strategy_from_dict(spec)


def _add_amplitude(p, default=None):
    p.add_argument("--alpha-sq", type=float, default=default, required=default is None,
                   help="mean photon number |alpha|^2 of the probe, photons/pulse")


def _add_phonon(p):
    g = p.add_argument_group("phonon state")
    g.add_argument("--kind", default="coherent", choices=["coherent", "thermal", "squeezed"])
    g.add_argument("--beta", type=float, default=2.0, help="displacement |beta| (dimensionless)")
    g.add_argument("--beta-phase", type=float, default=0.0, help="displacement phase in rad")
    g.add_argument("--freq-thz", type=float, default=4.0, help="mode frequency Omega/2pi in THz")
    g.add_argument("--n-th", type=float, default=1.0, help="thermal occupation (thermal kind only)")
    g.add_argument("--zeta", type=float, default=-0.2, help="squeezing parameter (squeezed kind only)")
    g.add_argument("--order", default="DS", choices=["DS", "SD"],
                   help="squeezed displaced-state operator order: D(beta)S(zeta) or S(zeta)D(beta)")


def _phonon(args) -> PhononState:
    beta = args.beta * complex(math.cos(args.beta_phase), math.sin(args.beta_phase))
    omega = 2.0 * math.pi * args.freq_thz
    if args.kind == "thermal":
        return PhononState.thermal(args.n_th, beta, omega)
    if args.kind == "squeezed":
        return PhononState.squeezed(args.zeta, beta, omega, args.order)
    return PhononState.coherent(beta, omega)


def _add_raman(p):
    g = p.add_argument_group("probe and coupling")
    g.add_argument("--probe-photons", type=float, default=2.9,
                   help="residual probe photons alpha_y^2 in photons/pulse")
    g.add_argument("--ratio", type=float, default=100.0, help="intensity ratio alpha_x^2/alpha_y^2")
    g.add_argument("--tau-chi", type=float, default=None,
                   help="Raman coupling tau*chi (default: calibrated to --modulation)")
    g.add_argument("--modulation", type=float, default=0.05,
                   help="peak-to-peak mean modulation fraction used to calibrate tau*chi")
    g.add_argument("--m", type=float, default=1.0, help="number of phonon oscillators M")
    g.add_argument("--form", default="ensemble", choices=["ensemble", "compact"],
                   help="coupling convention of the Raman model")
    g.add_argument("--noise", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("P2", "P1", "P0"),
                   help="detector excess variance p2*N^2 + p1*N + p0 (photons^2)")


def _raman(args, state: PhononState) -> RamanParams:
    params = RamanParams.from_probe(args.probe_photons, args.ratio, 0.0, args.m, args.form)
    tau = args.tau_chi
    if tau is None:
        tau = calibrate_tau_chi(params.alpha_y, params.alpha_x, abs(state.beta) or 1.0,
                                args.m, args.modulation)
    return RamanParams(tau, params.alpha_x, params.alpha_y, params.m_oscillators, params.form)


# -- subcommands ------------------------------------------------------------------

def cmd_sample(args):
    _resolve_seed(args)
    strategy = _strategy(args)
    data = sample_with_strategy(math.sqrt(args.alpha_sq), args.n, strategy, args.seed)
    io.write_dataset(args.out, data)
    _sidecar(args.out, _metadata(args, rng=RNG_ALGORITHM, strategy=strategy_to_dict(strategy)))


def _load_histogram(path, bin_width):
    with open(path, newline="") as fh:
        first = fh.readline().strip()
    if first.split(",")[0].strip() == "bin_center":
        return io.read_histogram(path)
    return histogram(io.read_dataset(path), bin_width)


def cmd_reconstruct(args):
    if not os.path.isfile(args.input):
        raise ValidationError(f"{args.input}: no such file")
    hist = _load_histogram(args.input, args.bin)
    cfg = TomographyConfig(args.nmax, args.iters, args.early_stop, args.support)
    try:
        rep = reconstruct(hist, cfg)
    except ValueError as exc:
        raise ValidationError(f"{args.input}: {exc}") from None
    if rep.support_warning:
        print(f"warning: >= 0.1% of the histogram mass lies beyond sqrt(2*{args.nmax}+1); "
              "raise --nmax", file=sys.stderr)
    io.write_fock(args.out, rep.distribution)
    meta = _metadata(args, reconstruction={k: v for k, v in rep.to_dict().items() if k != "distribution"})
    _sidecar(args.out, meta)


def cmd_stats(args):
    out = {}
    if args.input:
        d = io.read_fock(args.input)
        mean, var, q = distribution_stats(d)
        out.update(mean=mean, variance=var, mandel_q=q,
                   g2=None if q is None else g2_from_q(q, mean))
        if mean > 0:
            out["tv_to_poisson"] = total_variation(d, poisson_pmf(mean, np.arange(d.n_max + 1)))
    if args.energy_mev is not None and args.temperature_k is not None:
        out["bose_einstein_occupation"] = bose_einstein_occupation(args.energy_mev, args.temperature_k)
        out["notes"] = OCCUPATION_NOTE
    if args.occupation is not None:
        if args.energy_mev is None:
            raise ValueError("--occupation needs --energy-mev")
        out["effective_temperature_k"] = effective_temperature(args.occupation, args.energy_mev)
    if not out:
        raise ValueError("nothing to compute: give --in, or --energy-mev with --temperature-k/--occupation")
    out["metadata"] = _metadata(args)
    _emit(out, args.out)


def cmd_raman_trace(args):
    state = _phonon(args)
    params = _raman(args, state)
    delays = np.arange(args.start, args.stop + 0.5 * args.step, args.step)
    noise = NoiseModel(*args.noise)
    tr = simulate_trace(state, params, noise, delays, include_detector_noise=args.detector_noise,
                        moment_source=args.moments)
    io.write_trace(args.out, tr)
    _sidecar(args.out, _metadata(args, tau_chi=params.tau_chi))


def cmd_fft(args):
    cols = io.read_csv(args.input, io.TRACE)
    values = cols["var_n"] - cols["mean_n"] if args.column == "excess" else cols[args.column]
    if np.any(np.isnan(values)):
        raise ValidationError(f"{args.input}: column {args.column!r} contains NaN")
    try:
        freqs, mags = spectrum(values, cols["delay_ps"], positive_only=args.positive_only)
        peak = dominant_frequency(values, cols["delay_ps"], positive_only=args.positive_only)
    except ValueError as exc:
        raise ValidationError(f"{args.input}: {exc}") from None
    io.write_csv(args.out, io.FFT, {"freq_thz": freqs, "magnitude": mags})
    _sidecar(args.out, _metadata(args, dominant_frequency_thz=peak))
    print(json.dumps({"dominant_frequency_thz": peak}))


def cmd_fit_noise(args):
    cols = io.read_csv(args.input, io.NOISE_POINTS)
    fit = fit_excess_noise(np.column_stack([cols["mean"], cols["variance"]]))
    m = fit.model
    _emit({"p2": m.p2, "p1": m.p1, "p0": m.p0, "residual_norm": fit.residual_norm,
           "stderr": list(fit.stderr), "metadata": _metadata(args)}, args.out)


def cmd_phase_compare(args):
    _resolve_seed(args)
    strategy = _strategy(args)
    alpha = math.sqrt(args.alpha_sq)
    test = sample_with_strategy(alpha, args.n, strategy, args.seed)
    ref = sample_phav(alpha, args.n, args.seed, rng=make_rng(args.seed, 1))
    edges_range = (min(test.samples.min(), ref.samples.min()), max(test.samples.max(), ref.samples.max()))
    h_test = histogram(test, args.bin, range=edges_range)
    h_ref = histogram(ref, args.bin, range=edges_range)
    ks = ks_distance(h_test, h_ref)
    null = ks_null_scale(args.n)
    _emit({"ks_distance": ks, "ks_null_scale": null, "artifact_detected": ks > 3.0 * null,
           "lag_correlation": lag_correlation(test, args.max_lag)[1:].tolist(),
           "strategy": strategy_to_dict(strategy),
           "metadata": _metadata(args, rng=RNG_ALGORITHM)}, args.out)


def cmd_wigner(args):
    axis = np.linspace(-args.extent, args.extent, args.points)
    if args.phav_alpha_sq is not None:
        grid = phav_wigner(math.sqrt(args.phav_alpha_sq), axis, axis)
    else:
        grid = wigner(_phonon(args), args.t, axis, axis)
    xx, yy = grid.mesh()
    io.write_csv(args.out, io.WIGNER, {"x": xx.ravel(), "y": yy.ravel(), "w": grid.values.ravel()})
    _sidecar(args.out, _metadata(args, integral=grid.integral()))


def cmd_sweep(args):
    state = _phonon(args)
    params = _raman(args, state)
    if args.values:
        grid = np.array(args.values, dtype=float)
    elif args.log:
        grid = np.logspace(math.log10(args.start), math.log10(args.stop), args.num)
    else:
        grid = np.linspace(args.start, args.stop, args.num)
    rows = sweep_max_q(SweepAxis(args.axis), grid, state, params, NoiseModel(*args.noise), args.points)
    rows = np.asarray(rows, dtype=float)
    io.write_csv(args.out, io.SWEEP, {"axis_value": rows[:, 0], "max_q": rows[:, 1],
                                      "q_det_ref": rows[:, 2]})
    _sidecar(args.out, _metadata(args, tau_chi=params.tau_chi))


def cmd_pipeline(args):
    values = pipeline.read_config(args.config)
    if args.seed is not None:
        values["seed"] = args.seed
    elif values.get("seed") is None:
        values["seed"] = _resolve_seed(args)
    args.seed = values["seed"]
    cfg = pipeline.config_from_mapping(values)
    try:
        result = pipeline.run_experiment(cfg, threads=args.threads)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    pipeline.write_results(result, args.out)
    io.write_json(os.path.join(args.out, "metadata.json"), _metadata(args, **result.metadata))
    print(json.dumps({"dominant_frequency_thz": pipeline.trace_dominant_frequency(result)}))


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phavtomo", description=__doc__.splitlines()[0], epilog=UNITS)
    parser.add_argument("--version", action="version", version=f"phavtomo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=UNITS,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=func)
        return p

    p = add("sample", cmd_sample, "Draw phase-averaged coherent-state quadratures (CSV: pulse_index,x).")
    _add_amplitude(p)
    p.add_argument("--n", type=int, required=True, help="number of pulses")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (generated and reported if omitted)")
    p.add_argument("--out", required=True, help="output dataset CSV")
    _add_strategy(p)

    p = add("reconstruct", cmd_reconstruct,
            "Maximum-likelihood photon-number distribution from a dataset or histogram CSV.")
    p.add_argument("--in", dest="input", required=True,
                   help="dataset (pulse_index,x) or histogram (bin_center,density) CSV")
    p.add_argument("--bin", type=float, default=0.1, help="histogram bin width in quadrature units")
    p.add_argument("--nmax", type=int, default=150, help="Fock truncation N_max, photons")
    p.add_argument("--iters", type=int, default=100, help="MLE iterations")
    p.add_argument("--early-stop", type=float, default=1e-8, help="stop when max|dp| falls below; 0 disables")
    p.add_argument("--support", type=float, default=25.0, help="|X| bound for bin centers, quadrature units")
    p.add_argument("--out", required=True, help="output Fock CSV (n,p)")

    p = add("stats", cmd_stats, "Photon statistics of a Fock CSV, and Bose-Einstein utilities.")
    p.add_argument("--in", dest="input", default=None, help="Fock distribution CSV (n,p)")
    p.add_argument("--energy-mev", type=float, default=None, help="phonon energy in meV")
    p.add_argument("--temperature-k", type=float, default=None, help="lattice temperature in K")
    p.add_argument("--occupation", type=float, default=None,
                   help="phonon occupation, photons-equivalent quanta, for effective temperature")
    p.add_argument("--out", default=None, help="JSON output (default: stdout)")

    p = add("raman-trace", cmd_raman_trace,
            "Closed-form pump-probe photon statistics versus delay (CSV: delay_ps,mean_n,var_n,q,q_det).")
    _add_phonon(p)
    _add_raman(p)
    p.add_argument("--start", type=float, default=-0.5, help="first delay in ps")
    p.add_argument("--stop", type=float, default=2.5, help="last delay in ps")
    p.add_argument("--step", type=float, default=0.025, help="delay step in ps")
    p.add_argument("--moments", default="analytic", choices=["analytic", "fock"],
                   help="phonon moments from closed form or truncated-Fock oracle")
    p.add_argument("--detector-noise", action="store_true", help="add detector excess noise to var_n")
    p.add_argument("--out", required=True, help="output trace CSV")

    p = add("fft", cmd_fft, "Magnitude spectrum of a trace column over delay (CSV: freq_thz,magnitude).")
    p.add_argument("--in", dest="input", required=True, help="trace CSV")
    p.add_argument("--column", default="mean_n", choices=["mean_n", "var_n", "q", "q_det", "excess"],
                   help="trace column; 'excess' is var_n - mean_n")
    p.add_argument("--positive-only", action="store_true", help="use only delays > 0 ps")
    p.add_argument("--out", required=True, help="output spectrum CSV")

    p = add("fit-noise", cmd_fit_noise,
            "Fit detector excess variance p2*N^2 + p1*N + p0 to (mean,variance) CSV points.")
    p.add_argument("--in", dest="input", required=True, help="CSV with columns mean,variance (photons, photons^2)")
    p.add_argument("--out", default=None, help="JSON output (default: stdout)")

    p = add("phase-compare", cmd_phase_compare,
            "KS distance and lag correlations of a phase strategy against uniform random phases.")
    _add_amplitude(p, default=13.8)
    p.add_argument("--n", type=int, default=100_000, help="number of pulses per dataset")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (generated and reported if omitted)")
    p.add_argument("--bin", type=float, default=0.1, help="histogram bin width in quadrature units")
    p.add_argument("--max-lag", type=int, default=10, help="largest pulse lag for correlations")
    p.add_argument("--out", default=None, help="JSON output (default: stdout)")
    _add_strategy(p)

    p = add("wigner", cmd_wigner, "Wigner function on a square grid (CSV: x,y,w).")
    _add_phonon(p)
    p.add_argument("--phav-alpha-sq", type=float, default=None,
                   help="instead of a phonon state, the ring of a phase-averaged coherent state "
                        "with this photon number, photons/pulse")
    p.add_argument("--t", type=float, default=0.0, help="evolution time in ps")
    p.add_argument("--extent", type=float, default=6.0, help="half-width of the grid, quadrature units")
    p.add_argument("--points", type=int, default=121, help="grid points per axis")
    p.add_argument("--out", required=True, help="output Wigner CSV")

    p = add("sweep", cmd_sweep, "Maximum Mandel Q over one phonon period along a parameter axis "
                                "(CSV: axis_value,max_q,q_det_ref).")
    _add_phonon(p)
    _add_raman(p)
    p.add_argument("--axis", required=True, choices=[a.value for a in SweepAxis],
                   help="probe_photons (photons/pulse), phonon_amplitude (|beta|), oscillator_count (M)")
    p.add_argument("--values", type=float, nargs="+", default=None, help="explicit axis values")
    p.add_argument("--start", type=float, default=1.0)
    p.add_argument("--stop", type=float, default=10.0)
    p.add_argument("--num", type=int, default=10)
    p.add_argument("--log", action="store_true", help="logarithmic grid")
    p.add_argument("--points", type=int, default=64, help="delay samples per phonon period")
    p.add_argument("--out", required=True, help="output sweep CSV")

    p = add("pipeline", cmd_pipeline,
            "End-to-end synthetic experiment from a flat TOML config into a result directory.")
    p.add_argument("--config", required=True, help="TOML config (delays in ps, frequency in THz)")
    p.add_argument("--out", required=True, help="result directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $PHAVTOMO_THREADS or CPU count)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"phavtomo {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"phavtomo {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"phavtomo {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
