"""Spectral Kuramoto-Sivashinsky solver with Besov-norm estimators and increment identities.

Submodules
----------
spectral    periodic grids, FFTs and exact spectral operators
evolution   stiff time stepping for KS and forced Burgers equations
besov       finite-difference and dyadic Besov norm estimators
identities  residual checks of increment and energy identities
kinetic     kinetic formulation of Burgers and the Q decomposition
harness     L-sweeps, spectra, snapshot files and config files
verify      named verification suites
cli         the ``ksbesov`` command
"""

from .besov import (
    BesovParams,
    HGrid,
    LPFamily,
    NormEstimate,
    besov_norm_fd,
    besov_norm_lp,
    duality_pairing,
    lp_decompose,
    rescaled_norm,
    structure_function,
    three_scale_split,
)
from .evolution import (
    ConfigurationError,
    DivergenceError,
    EquationSpec,
    RunResult,
    StepperConfig,
    integrate,
    random_initial_condition,
)
from .harness import (
    SweepConfig,
    SweepRecord,
    fit_log_exponent,
    load_trajectory,
    power_spectrum,
    run_sweep,
    save_trajectory,
)
from .identities import IdentityReport
from .kinetic import KineticProfile, kinetic_profile, q_decomposition
from .spectral import (
    DomainError,
    GridMismatchError,
    GridSpec,
    RealField,
    SpectralField,
    Trajectory,
    derivative,
    fft_forward,
    fft_inverse,
    halfwave,
)
from .verify import SUITES, run_suite

__version__ = "0.1.0"

__all__ = [
    "BesovParams", "HGrid", "LPFamily", "NormEstimate", "besov_norm_fd", "besov_norm_lp",
    "duality_pairing", "lp_decompose", "rescaled_norm", "structure_function", "three_scale_split",
    "ConfigurationError", "DivergenceError", "EquationSpec", "RunResult", "StepperConfig",
    "integrate", "random_initial_condition",
    "SweepConfig", "SweepRecord", "fit_log_exponent", "load_trajectory", "power_spectrum",
    "run_sweep", "save_trajectory",
    "IdentityReport", "KineticProfile", "kinetic_profile", "q_decomposition",
    "DomainError", "GridMismatchError", "GridSpec", "RealField", "SpectralField", "Trajectory",
    "derivative", "fft_forward", "fft_inverse", "halfwave",
    "SUITES", "run_suite",
]
