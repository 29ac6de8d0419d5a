"""End-to-end synthetic pump-probe tomography experiment.

Per delay: closed-form Raman prediction -> forward sampling of phase-averaged
quadratures -> histogram -> MLE reconstruction -> photon statistics.  The
reconstructed trace is returned next to the closed-form reference so the two
can be compared directly.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from phavtomo import __version__, _backend, io
from phavtomo.errors import ValidationError
from phavtomo.fock import distribution_stats, poisson_pmf, total_variation
from phavtomo.raman import (NoiseModel, PumpProbeTrace, RamanParams, calibrate_tau_chi,
                            dominant_frequency, mandel_q, mean_photon_number, moments_at,
                            photon_variance, q_det, spectrum)
from phavtomo.sampling import (RNG_ALGORITHM, QuadratureDataset, QuadratureHistogram,
                               histogram, make_rng, sample_phav)
from phavtomo.states import PhononState
from phavtomo.tomography import ReconstructionReport, TomographyConfig, projector_matrix, reconstruct

SCHEMA_VERSION = 1
THREADS_ENV = "PHAVTOMO_THREADS"


class ForwardModel(str, enum.Enum):
    POISSONIAN = "poissonian_phav"
    GAMMA_MIXED = "gamma_mixed_phav"


def forward_sample(mean_n: float, var_n: float, n: int, seed: int,
                   model=ForwardModel.POISSONIAN,
                   rng: Optional[np.random.Generator] = None) -> QuadratureDataset:
    """Quadrature samples of light with the requested photon mean (and variance).

    The Poissonian model samples a phase-averaged coherent state at
    ``alpha = sqrt(mean_n)`` and ignores ``var_n``.  The gamma-mixed model
    draws a Gamma-distributed intensity per pulse (mean ``mean_n``, variance
    ``var_n - mean_n``), which gives negative-binomial photon statistics with
    the requested variance.  Sub-Poissonian targets cannot be produced by
    classical intensity mixing and are rejected.
    """
    model = ForwardModel(model)
    if not mean_n > 0:
        raise ValueError(f"mean_n must be positive, got {mean_n}")
    rng = make_rng(seed) if rng is None else rng
    mixing_var = var_n - mean_n
    if model is ForwardModel.POISSONIAN or mixing_var == 0.0:
        return sample_phav(math.sqrt(mean_n), n, seed, rng=rng)
    if mixing_var < 0:
        raise ValueError(
            f"gamma-mixed forward model cannot produce sub-Poissonian light "
            f"(variance {var_n:.6g} < mean {mean_n:.6g})")
    if int(n) != n or n < 1:
        raise ValueError(f"sample count must be a positive integer, got {n}")
    shape = mean_n * mean_n / mixing_var
    intensity = rng.gamma(shape, mixing_var / mean_n, int(n))
    phi = rng.uniform(0.0, 2.0 * math.pi, int(n))
    noise = rng.normal(0.0, math.sqrt(0.5), int(n))
    x = np.sqrt(2.0 * intensity) * np.cos(phi) + noise
    return QuadratureDataset(x, seed=seed)


@dataclass(frozen=True)
class ExperimentConfig:
    phonon: PhononState
    raman: RamanParams
    noise: NoiseModel = NoiseModel()
    delays: tuple[float, float, float] = (0.0, 2.5, 0.0625)  # start, stop, step (ps)
    samples_per_delay: int = 100_000
    tomography: TomographyConfig = TomographyConfig()
    bin_width: float = 0.1
    seed: int = 0
    forward_model: ForwardModel = ForwardModel.POISSONIAN
    overlap_window_ps: float = 0.0  # |delay| below this is flagged as pump-probe overlap

    def __post_init__(self):
        object.__setattr__(self, "forward_model", ForwardModel(self.forward_model))
        start, stop, step = self.delays
        if not step > 0:
            raise ValueError("delay step must be positive")
        if stop < start:
            raise ValueError("delay stop must not precede start")
        if self.samples_per_delay < 1000:
            raise ValueError("samples_per_delay must be >= 1000")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")

    def delay_grid(self) -> np.ndarray:
        start, stop, step = self.delays
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phonon"]["kind"] = self.phonon.kind.value
        for key in ("beta", "zeta"):
            z = complex(d["phonon"][key])
            d["phonon"][key] = [z.real, z.imag]
        d["forward_model"] = self.forward_model.value
        d["delays"] = list(self.delays)
        return d


@dataclass
class ExperimentResult:
    delays: np.ndarray
    histograms: list[QuadratureHistogram]
    reports: list[ReconstructionReport]
    trace: PumpProbeTrace
    reference_trace: PumpProbeTrace
    metadata: dict = field(default_factory=dict)


def _stream_key(index: int) -> tuple[int]:
    return (index,)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "") or os.cpu_count() or 1))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """Run the full synthetic experiment; output is independent of ``threads``."""
    delays = cfg.delay_grid()
    support = cfg.tomography.quadrature_support
    hist_range = (-support, support)
    probe = histogram(np.zeros(1), cfg.bin_width, range=hist_range)
    proj = projector_matrix(probe.centers, cfg.tomography.n_max)

    def one(i: int):
        t = float(delays[i])
        try:
            m = moments_at(cfg.phonon, t)
            mean = mean_photon_number(cfg.raman, m)
            var = photon_variance(cfg.raman, m) + cfg.noise.excess(mean)
            rng = make_rng(cfg.seed, *_stream_key(i))
            data = forward_sample(mean, var, cfg.samples_per_delay, cfg.seed, cfg.forward_model, rng=rng)
            if np.max(np.abs(data.samples)) >= support:
                raise ValidationError(f"samples exceed the quadrature support +/-{support}")
            hist = histogram(data, cfg.bin_width, range=hist_range)
            report = reconstruct(hist, cfg.tomography, projector=proj)
        except Exception as exc:
            raise type(exc)(f"delay index {i} (t = {t:g} ps): {exc}") from exc
        return mean, var, hist, report

    n_threads = threads or _threads()
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one, range(delays.size)))
    else:
        results = [one(i) for i in range(delays.size)]

    ref_mean = np.array([r[0] for r in results])
    ref_var = np.array([r[1] for r in results])
    reference = PumpProbeTrace(
        delays, ref_mean, ref_var,
        np.array([mandel_q(a, b) for a, b in zip(ref_mean, ref_var)]),
        np.array([q_det(a, cfg.noise) for a in ref_mean]))

    rec = [distribution_stats(r[3].distribution) for r in results]
    rec_mean = np.array([s[0] for s in rec])
    rec_var = np.array([s[1] for s in rec])
    rec_q = np.array([np.nan if s[2] is None else s[2] for s in rec])
    rec_qdet = np.array([q_det(a, cfg.noise) if a > 0 else np.nan for a in rec_mean])
    trace = PumpProbeTrace(delays, rec_mean, rec_var, rec_q, rec_qdet)

    metadata = {
        "tool": "phavtomo",
        "version": __version__,
        "kernel_backend": _backend.BACKEND,
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "rng_streams": "SeedSequence(seed, spawn_key=(delay_index,))",
        "bin_width": cfg.bin_width,
        "histogram_range": list(hist_range),
        "flagged_overlap_delays": [float(t) for t in delays if abs(t) < cfg.overlap_window_ps],
        "config": cfg.to_dict(),
    }
    return ExperimentResult(delays, [r[2] for r in results], [r[3] for r in results],
                            trace, reference, metadata)


@dataclass(frozen=True)
class TraceComparison:
    max_mean_dev: float
    rms_mean_dev: float
    max_var_dev: float
    rms_var_dev: float
    mean_dev: np.ndarray
    var_dev: np.ndarray
    tv_distance: np.ndarray  # nan where the reference photon law is unknown


def reference_photon_law(mean: float, var: float, model, n_max: int) -> Optional[np.ndarray]:
    """Photon-number law the forward model actually samples, or None if not available."""
    model = ForwardModel(model)
    n = np.arange(n_max + 1)
    if model is ForwardModel.POISSONIAN or var == mean:
        return poisson_pmf(mean, n)
    if var > mean:
        k = mean * mean / (var - mean)
        return stats.nbinom.pmf(n, k, k / (k + mean))
    return None


def compare_traces(result: ExperimentResult, forward_model=None) -> TraceComparison:
    """Deviation of the reconstructed trace from the closed-form reference, delay by delay."""
    tr, ref = result.trace, result.reference_trace
    mean_dev = tr.mean_n - ref.mean_n
    var_dev = tr.var_n - ref.var_n
    if forward_model is None:
        forward_model = result.metadata.get("config", {}).get("forward_model", ForwardModel.POISSONIAN)
    tv = np.full(len(ref), np.nan)
    for i, rep in enumerate(result.reports):
        law = reference_photon_law(ref.mean_n[i], ref.var_n[i], forward_model, rep.distribution.n_max)
        if law is not None:
            tv[i] = total_variation(rep.distribution, law)
    return TraceComparison(
        max_mean_dev=float(np.max(np.abs(mean_dev))),
        rms_mean_dev=float(np.sqrt(np.mean(mean_dev ** 2))),
        max_var_dev=float(np.max(np.abs(var_dev))),
        rms_var_dev=float(np.sqrt(np.mean(var_dev ** 2))),
        mean_dev=mean_dev, var_dev=var_dev, tv_distance=tv,
    )


def trace_dominant_frequency(result: ExperimentResult, column: str = "mean_n",
                             reference: bool = False) -> Optional[float]:
    tr = result.reference_trace if reference else result.trace
    return dominant_frequency(getattr(tr, column), tr.delays, positive_only=True)


# -- configuration file -------------------------------------------------------

# Flat keys accepted in a pipeline TOML file, with their defaults.  Physical
# units: ps for delays, THz for the mode frequency, photons/pulse for the probe.
CONFIG_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "phonon_kind": "coherent",
    "phonon_beta": 2.0,
    "phonon_beta_phase": 0.0,  # rad
    "phonon_frequency_thz": 4.0,
    "phonon_n_th": 0.0,
    "phonon_zeta": 0.0,
    "phonon_zeta_phase": 0.0,  # rad
    "operator_order": "DS",
    "probe_photons": 2.9,
    "intensity_ratio": 100.0,
    "tau_chi": None,  # None -> calibrated from modulation_fraction
    "modulation_fraction": 0.05,
    "m_oscillators": 1.0,
    "coupling_form": "ensemble",
    "noise_p2": 0.0,
    "noise_p1": 0.0,
    "noise_p0": 0.0,
    "delay_start_ps": 0.0,
    "delay_stop_ps": 2.5,
    "delay_step_ps": 0.0625,
    "samples_per_delay": 100_000,
    "n_max": 150,
    "iterations": 100,
    "early_stop_delta": 1e-8,
    "quadrature_support": 25.0,
    "bin_width": 0.1,
    "seed": None,
    "forward_model": ForwardModel.POISSONIAN.value,
    "overlap_window_ps": 0.0,
}


def config_from_mapping(values: dict) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from flat keys; unknown keys are rejected.

    ``seed`` must be present (the CLI fills it in when missing).
    """
    unknown = sorted(set(values) - set(CONFIG_DEFAULTS))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    v = {**CONFIG_DEFAULTS, **values}
    if v["schema_version"] != SCHEMA_VERSION:
        raise ValidationError(f"schema_version {v['schema_version']!r} is not supported "
                              f"(expected {SCHEMA_VERSION})")
    if v["seed"] is None:
        raise ValidationError("config needs a 'seed'")
    try:
        beta = v["phonon_beta"] * np.exp(1j * v["phonon_beta_phase"])
        omega = 2.0 * math.pi * v["phonon_frequency_thz"]
        kind = v["phonon_kind"]
        if kind == "coherent":
            state = PhononState.coherent(beta, omega)
        elif kind == "thermal":
            state = PhononState.thermal(v["phonon_n_th"], beta, omega)
        elif kind == "squeezed":
            zeta = v["phonon_zeta"] * np.exp(1j * v["phonon_zeta_phase"])
            state = PhononState.squeezed(zeta, beta, omega, v["operator_order"])
        else:
            raise ValueError(f"phonon_kind must be coherent, thermal or squeezed, not {kind!r}")
        raman = RamanParams.from_probe(v["probe_photons"], v["intensity_ratio"], 0.0,
                                       v["m_oscillators"], v["coupling_form"])
        tau = v["tau_chi"]
        if tau is None:
            tau = calibrate_tau_chi(raman.alpha_y, raman.alpha_x, abs(beta),
                                    v["m_oscillators"], v["modulation_fraction"])
        raman = RamanParams(float(tau), raman.alpha_x, raman.alpha_y, raman.m_oscillators, raman.form)
        return ExperimentConfig(
            phonon=state, raman=raman,
            noise=NoiseModel(v["noise_p2"], v["noise_p1"], v["noise_p0"]),
            delays=(float(v["delay_start_ps"]), float(v["delay_stop_ps"]), float(v["delay_step_ps"])),
            samples_per_delay=int(v["samples_per_delay"]),
            tomography=TomographyConfig(int(v["n_max"]), int(v["iterations"]),
                                        float(v["early_stop_delta"]), float(v["quadrature_support"])),
            bin_width=float(v["bin_width"]), seed=int(v["seed"]),
            forward_model=v["forward_model"], overlap_window_ps=float(v["overlap_window_ps"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"invalid config: {exc}") from None


def read_config(path) -> dict:
    """Raw flat key-value mapping from a TOML file."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read ({exc.strerror or exc})") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    nested = [k for k, val in data.items() if isinstance(val, dict)]
    if nested:
        raise ValidationError(f"{path}: config must be flat, found tables {nested}")
    return data


# -- result directory ----------------------------------------------------------

def write_results(result: ExperimentResult, outdir) -> None:
    """``trace.csv``, ``reference_trace.csv``, ``hist_<i>.csv``, ``fock_<i>.csv``, ``fft.csv``, ``report.json``."""
    outdir = os.fspath(outdir)
    os.makedirs(outdir, exist_ok=True)
    io.write_trace(os.path.join(outdir, "trace.csv"), result.trace)
    io.write_trace(os.path.join(outdir, "reference_trace.csv"), result.reference_trace)
    for i, (h, rep) in enumerate(zip(result.histograms, result.reports)):
        io.write_histogram(os.path.join(outdir, f"hist_{i}.csv"), h)
        io.write_fock(os.path.join(outdir, f"fock_{i}.csv"), rep.distribution)
    freqs, mags = spectrum(result.trace.mean_n, result.delays, positive_only=True)
    io.write_csv(os.path.join(outdir, "fft.csv"), io.FFT, {"freq_thz": freqs, "magnitude": mags})
    cmp = compare_traces(result)
    report = {
        "metadata": result.metadata,
        "dominant_frequency_thz": trace_dominant_frequency(result),
        "reference_dominant_frequency_thz": trace_dominant_frequency(result, reference=True),
        "comparison": {
            "max_mean_dev": cmp.max_mean_dev, "rms_mean_dev": cmp.rms_mean_dev,
            "max_var_dev": cmp.max_var_dev, "rms_var_dev": cmp.rms_var_dev,
            "tv_distance": [None if np.isnan(t) else float(t) for t in cmp.tv_distance],
        },
        "reconstructions": [
            {"delay_ps": float(t), "iterations_run": r.iterations_run, "converged": r.converged,
             "support_warning": r.support_warning,
             "final_log_likelihood": float(r.log_likelihood_per_iteration[-1])}
            for t, r in zip(result.delays, result.reports)
        ],
    }
    io.write_json(os.path.join(outdir, "report.json"), report)
