"""Constants, thermal occupation and material response models.

Everything here is an immutable value or a pure function of its arguments.
Frequencies are angular (rad/s) and all models are isotropic and non-magnetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
import scipy.constants as sc
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, RangeError


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float
    c: float
    eps0: float
    mu0: float
    kB: float
    name: str = "custom"

    def __post_init__(self):
        for key in ("hbar", "c", "eps0", "mu0", "kB"):
            if not getattr(self, key) > 0:
                raise ValueError(f"constant {key} must be positive")
        if abs(self.mu0 * self.eps0 * self.c**2 - 1.0) > 1e-12:
            raise ValueError("mu0 * eps0 * c**2 must equal 1")


SI = PhysicalConstants(
    hbar=sc.hbar, c=sc.c, eps0=sc.epsilon_0, mu0=1.0 / (sc.epsilon_0 * sc.c**2), kB=sc.k, name="si"
)
NATURAL = PhysicalConstants(hbar=1.0, c=1.0, eps0=1.0, mu0=1.0, kB=1.0, name="natural")


# -- polarizability ---------------------------------------------------------

@dataclass(frozen=True)
class LorentzPolarizability:
    """Single damped resonance, ``alpha0 * omega0**2 / (omega0**2 - w**2 - i*gamma*w)``."""

    alpha0: float
    omega0: float
    gamma: float = 0.0

    def __post_init__(self):
        if self.alpha0 < 0 or not self.omega0 > 0 or self.gamma < 0:
            raise ValueError("Lorentz polarizability needs alpha0 >= 0, omega0 > 0, gamma >= 0")


@dataclass(frozen=True)
class ConstantPolarizability:
    alpha0: float


def _as_samples(samples):
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 2:
        raise ValueError("tabulated samples must be rows of (omega, re, im) with at least 2 rows")
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise ValueError("tabulated omega samples must be strictly increasing")
    return arr


@dataclass(frozen=True)
class TabulatedPolarizability:
    """Samples as rows ``(omega, Re alpha, Im alpha)``; monotone cubic in between."""

    samples: Tuple[Tuple[float, float, float], ...]
    _interp: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = _as_samples(self.samples)
        if np.any(arr[arr[:, 0] > 0, 2] < 0):
            raise ValueError("tabulated polarizability violates passivity (Im alpha < 0)")
        object.__setattr__(self, "samples", tuple(map(tuple, arr.tolist())))
        object.__setattr__(self, "_interp", _pchip_pair(arr))


PolarizabilityModel = Union[LorentzPolarizability, ConstantPolarizability, TabulatedPolarizability]


# -- media ------------------------------------------------------------------

@dataclass(frozen=True)
class DrudeMedium:
    omega_p: float
    gamma_d: float

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValueError("Drude omega_p must be positive")
        if not self.gamma_d > 0:
            # lossless Drude puts poles on the real frequency axis
            raise ValueError("Drude gamma_d must be positive")


@dataclass(frozen=True)
class PerfectMirror:
    pass


@dataclass(frozen=True)
class Vacuum:
    pass


@dataclass(frozen=True)
class TabulatedPermittivity:
    """Samples as rows ``(omega, Re eps, Im eps)`` of the relative permittivity."""

    samples: Tuple[Tuple[float, float, float], ...]
    _interp: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arr = _as_samples(self.samples)
        if np.any(arr[arr[:, 0] > 0, 2] < 0):
            raise ValueError("tabulated permittivity violates passivity (Im eps < 0)")
        object.__setattr__(self, "samples", tuple(map(tuple, arr.tolist())))
        object.__setattr__(self, "_interp", _pchip_pair(arr))


MediumModel = Union[DrudeMedium, PerfectMirror, Vacuum, TabulatedPermittivity]


@dataclass(frozen=True)
class ParticleModel:
    mass: float
    polarizability: PolarizabilityModel

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("particle mass must be positive")


@dataclass(frozen=True)
class ThermalEnvironment:
    temperature: float

    def __post_init__(self):
        if not self.temperature >= 0:
            raise ValueError("temperature must be >= 0")


def _pchip_pair(arr):
    return (
        PchipInterpolator(arr[:, 0], arr[:, 1], extrapolate=False),
        PchipInterpolator(arr[:, 0], arr[:, 2], extrapolate=False),
    )


def _eval_tabulated(model, omega):
    omega = np.asarray(omega, dtype=float)
    lo, hi = model.samples[0][0], model.samples[-1][0]
    if np.any((omega < lo) | (omega > hi)):
        raise RangeError(f"frequency outside tabulated range [{lo:g}, {hi:g}]")
    re, im = model._interp
    return re(omega) + 1j * im(omega)


# -- operations -------------------------------------------------------------

def occupation(omega, env: ThermalEnvironment, k: PhysicalConstants = SI):
    """Bose-Einstein occupation ``1/(exp(hbar w / kB T) - 1)``; zero at T = 0."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("occupation requires omega > 0")
    if env.temperature == 0:
        return np.zeros_like(omega)[()]
    x = k.hbar * omega / (k.kB * env.temperature)
    # exp(-x) / (1 - exp(-x)) stays finite for large x
    return (np.exp(-x) / -np.expm1(-x))[()]


def occupation_derivative(omega, env: ThermalEnvironment, k: PhysicalConstants = SI):
    """d n / d omega evaluated from the exponential form; negative for all omega > 0."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("occupation_derivative requires omega > 0")
    if env.temperature == 0:
        raise DomainError("occupation_derivative is undefined at T = 0")
    beta = k.hbar / (k.kB * env.temperature)
    x = beta * omega
    # exp(x)/(exp(x)-1)^2 rewritten in exp(-x) to avoid overflow
    return (-beta * np.exp(-x) / np.expm1(-x) ** 2)[()]


def polarizability_at(model: PolarizabilityModel, omega):
    """Complex polarizability at real frequency (signed omega allowed for Lorentz)."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(model, LorentzPolarizability):
        w0sq = model.omega0**2
        return (model.alpha0 * w0sq / (w0sq - omega**2 - 1j * model.gamma * omega))[()]
    if isinstance(model, ConstantPolarizability):
        return (np.full(omega.shape, model.alpha0, dtype=complex))[()]
    if isinstance(model, TabulatedPolarizability):
        if np.any(omega < 0):
            raise DomainError("tabulated polarizability requires omega >= 0")
        return _eval_tabulated(model, omega)[()]
    raise TypeError(f"unknown polarizability model {model!r}")


def polarizability_imaginary_axis(model: PolarizabilityModel, xi):
    """alpha(i xi), real for the analytic models."""
    xi = np.asarray(xi, dtype=float)
    if isinstance(model, LorentzPolarizability):
        w0sq = model.omega0**2
        return (model.alpha0 * w0sq / (w0sq + xi**2 + model.gamma * xi))[()]
    if isinstance(model, ConstantPolarizability):
        return np.full(xi.shape, model.alpha0)[()]
    raise DomainError("tabulated polarizability has no imaginary-frequency continuation")


def permittivity_at(model: MediumModel, omega):
    """Relative permittivity; PerfectMirror returns +inf as a sentinel."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(model, Vacuum):
        return np.ones(omega.shape, dtype=complex)[()]
    if isinstance(model, DrudeMedium):
        if np.any(omega <= 0):
            raise DomainError("Drude permittivity has a pole at omega = 0")
        return (1.0 - model.omega_p**2 / (omega**2 + 1j * model.gamma_d * omega))[()]
    if isinstance(model, PerfectMirror):
        return np.full(omega.shape, np.inf + 0j)[()]
    if isinstance(model, TabulatedPermittivity):
        return _eval_tabulated(model, omega)[()]
    raise TypeError(f"unknown medium model {model!r}")


def permittivity_imaginary_axis(model: MediumModel, xi):
    xi = np.asarray(xi, dtype=float)
    if isinstance(model, Vacuum):
        return np.ones(xi.shape)[()]
    if isinstance(model, DrudeMedium):
        if np.any(xi <= 0):
            raise DomainError("Drude permittivity has a pole at xi = 0")
        return (1.0 + model.omega_p**2 / (xi**2 + model.gamma_d * xi))[()]
    if isinstance(model, PerfectMirror):
        return np.full(xi.shape, np.inf)[()]
    raise DomainError("tabulated permittivity has no imaginary-frequency continuation")


def thermal_wavelength(env: ThermalEnvironment, k: PhysicalConstants = SI) -> float:
    """Characteristic thermal photon wavelength ``4 pi hbar c / (kB T)``."""
    if env.temperature == 0:
        raise DomainError("thermal wavelength diverges at T = 0")
    return 4.0 * np.pi * k.hbar * k.c / (k.kB * env.temperature)
