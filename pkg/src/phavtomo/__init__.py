"""Phase-averaged quadrature tomography and pump-probe photon-statistics simulation."""

__version__ = "0.1.0"

from phavtomo._backend import BACKEND  # noqa: E402
from phavtomo.errors import NumericalFailure, TruncationError, ValidationError  # noqa: E402
from phavtomo.fock import (FockDistribution, bose_einstein_occupation, distribution_stats,  # noqa: E402
                           effective_temperature, fock_quadrature_density, poisson_pmf)
from phavtomo.sampling import (QuadratureDataset, QuadratureHistogram, histogram,  # noqa: E402
                               ks_distance, lag_correlation, sample_phav, sample_with_strategy)
from phavtomo.states import PhononState, moments, phav_wigner, wigner  # noqa: E402
from phavtomo.tomography import TomographyConfig, reconstruct  # noqa: E402

__all__ = [
    "BACKEND", "FockDistribution", "NumericalFailure", "PhononState", "QuadratureDataset",
    "QuadratureHistogram", "TomographyConfig", "TruncationError", "ValidationError",
    "bose_einstein_occupation", "distribution_stats", "effective_temperature",
    "fock_quadrature_density", "histogram", "ks_distance", "lag_correlation", "moments",
    "phav_wigner", "poisson_pmf", "reconstruct", "sample_phav", "sample_with_strategy", "wigner",
]
