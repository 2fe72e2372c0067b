"""Stabilizer Rényi entropy of the transverse-field Ising chain via free fermions.

Submodules
----------
freefermion  Majorana two-point kernels (infinite chain by quadrature, finite ring exactly)
wick         Pauli ↔ Majorana bookkeeping and Wick determinants
entropy      M₂ / M₀ from sums of minor powers
oracle       dense exact diagonalization and 4^N Pauli enumeration
analysis     fits and figure data
cli          ``tfim-magic`` command line
"""

from ._accel import NUMBA_ENABLED, backend_name
from .analysis import extensive_fit, figure_data, fit_inverse, fit_linear
from .entropy import EntropyResult, density_sweep, m2_pure, m2_reduced, single_site_m2
from .errors import CapacityError, MagicError, NumericalError, QuadratureError
from .freefermion import (
    FINITE_CHAIN,
    THERMODYNAMIC,
    CorrelationKernel,
    QuadratureConfig,
    build_kernel,
    build_kernel_finite,
    build_kernel_thermodynamic,
    thermodynamic_correlator,
)
from .wick import MajoranaMonomial, PauliString, majorana_to_pauli, pauli_to_majorana

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "extensive_fit",
    "figure_data",
    "fit_inverse",
    "fit_linear",
    "EntropyResult",
    "density_sweep",
    "m2_pure",
    "m2_reduced",
    "single_site_m2",
    "CapacityError",
    "MagicError",
    "NumericalError",
    "QuadratureError",
    "FINITE_CHAIN",
    "THERMODYNAMIC",
    "CorrelationKernel",
    "QuadratureConfig",
    "build_kernel",
    "build_kernel_finite",
    "build_kernel_thermodynamic",
    "thermodynamic_correlator",
    "MajoranaMonomial",
    "PauliString",
    "majorana_to_pauli",
    "pauli_to_majorana",
]
