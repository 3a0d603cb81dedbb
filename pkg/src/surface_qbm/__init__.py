"""Open-system coefficients of a polarizable particle near a planar surface.

The package evaluates decoherence, dissipation, momentum-diffusion and drag
coefficients, Casimir-Polder potentials and forces, and bath kernels for a
particle above a half-space, and cross-checks them dynamically against a
density-matrix solver and Langevin ensembles.
"""
from ._accel import USE_NUMBA
from .coefficients import (
    COEFFICIENT_NAMES,
    CoefficientSet,
    KernelGrid,
    KernelTable,
    Scenario,
    SpectralGrid,
    Split,
    compute_coefficients,
    cp_force_lateral,
    cp_force_vertical,
    cp_potential_first,
    cp_potential_second,
    diffusion_coefficient,
    drag_coefficient,
    extrapolated_lambda,
    gamma_coefficient,
    kernel_sample,
    lambda_coefficient,
)
from .errors import ConfigError, DomainError, QuadratureError, RangeError
from .physics import (
    NATURAL,
    SI,
    ConstantPolarizability,
    DrudeMedium,
    LorentzPolarizability,
    ParticleModel,
    PerfectMirror,
    PhysicalConstants,
    TabulatedPermittivity,
    TabulatedPolarizability,
    ThermalEnvironment,
    Vacuum,
)
from .surface import KParQuadrature

BACKEND = "numba" if USE_NUMBA else "numpy"
__version__ = "0.1.0"
