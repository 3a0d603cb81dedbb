"""Free-space dyadic Green tensor and its coincidence limits.

Convention: the tensor solves ``curl curl G - k**2 G = delta`` with outgoing
waves, which gives ``Im Tr G(r, r) = omega / (2 pi c)``.  Written with
spherical Hankel functions ``h_n = j_n + i y_n`` of ``x = k r``::

    G(r1, r2) = (i k / 4 pi) [(h0 - h1/x) 1 + h2 e_r e_r]

The real part diverges as ``1/r**3`` at coincidence and is treated as a
position-independent self-energy; coincidence blocks therefore carry the
imaginary part only.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .errors import DomainError
from .physics import SI, PhysicalConstants

AXES = "xyz"
LATERAL = "xy"


class Part(str, Enum):
    FREE = "free"
    SCATTERING = "scattering"
    TOTAL = "total"


@dataclass(frozen=True)
class GreenBlock:
    values: np.ndarray  # (3, 3) complex, 1/m
    omega: float
    part: Part
    r1: tuple = None
    r2: tuple = None

    def __add__(self, other):
        return GreenBlock(self.values + other.values, self.omega, Part.TOTAL, self.r1, self.r2)


@dataclass(frozen=True)
class DerivedGreenBlock:
    """``values[i, j, p, k] = d/dr1_i G_pk(r1, r2) d/dr2_j`` at coincidence, i, j in {x, y}."""

    values: np.ndarray  # (2, 2, 3, 3) complex, 1/m**3
    omega: float
    part: Part

    def __add__(self, other):
        return DerivedGreenBlock(self.values + other.values, self.omega, Part.TOTAL)


# Taylor coefficients in x**2 of Im(h0 - h1/x) = j0 - j1/x and of Im h2 / x**2 = j2 / x**2
IM_ISO_SERIES = (2.0 / 3.0, -2.0 / 15.0, 1.0 / 105.0)
IM_DYAD_SERIES = (1.0 / 15.0, -1.0 / 210.0)


def _wavenumber(omega, k):
    if not omega > 0:
        raise DomainError("Green tensor requires omega > 0")
    return omega / k.c


def free_green(r1, r2, omega: float, k: PhysicalConstants = SI) -> GreenBlock:
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    sep = r1 - r2
    r = float(np.linalg.norm(sep))
    if r == 0.0:
        raise DomainError("free_green is singular at coincidence; use free_green_coincidence_im")
    kw = _wavenumber(omega, k)
    x = kw * r
    h = [spherical_jn(n, x) + 1j * spherical_yn(n, x) for n in range(3)]
    iso = h[0] - h[1] / x
    e = sep / r
    values = 1j * kw / (4 * np.pi) * (iso * np.eye(3) + h[2] * np.outer(e, e))
    return GreenBlock(values, omega, Part.FREE, tuple(r1), tuple(r2))


def free_green_im_array(seps, omega: float, k: PhysicalConstants = SI):
    """Im G0 for an array of separation vectors ``(..., 3)``; finite at zero separation."""
    seps = np.asarray(seps, dtype=float)
    kw = _wavenumber(omega, k)
    r = np.linalg.norm(seps, axis=-1)
    x = kw * r
    safe = np.where(x > 0, x, 1.0)
    iso = np.where(x > 0, spherical_jn(0, safe) - spherical_jn(1, safe) / safe, 2.0 / 3.0)
    dyad = np.where(x > 0, spherical_jn(2, safe) / safe**2, 1.0 / 15.0) * kw**2
    eye = np.eye(3)
    out = iso[..., None, None] * eye + dyad[..., None, None] * seps[..., :, None] * seps[..., None, :]
    return kw / (4 * np.pi) * out


def free_green_coincidence_im(omega: float, k: PhysicalConstants = SI) -> np.ndarray:
    """Im G0(r, r, omega) = (omega / 6 pi c) * identity."""
    kw = _wavenumber(omega, k)
    return kw / (4 * np.pi) * IM_ISO_SERIES[0] * np.eye(3)


def free_green_coincidence(omega: float, k: PhysicalConstants = SI) -> GreenBlock:
    return GreenBlock(1j * free_green_coincidence_im(omega, k), omega, Part.FREE)


def free_green_lateral_derivatives(omega: float, k: PhysicalConstants = SI, z_offset: float = 0.0) -> DerivedGreenBlock:
    """Im of the lateral double derivative of G0 at coincidence.

    Since G0 depends on r1 - r2 only, d/dr2_j = -d/dR_j and the block is
    ``-d_i d_j Im G0(R)`` at R = 0, read off the x**2 terms of the series.
    """
    if z_offset != 0.0:
        raise DomainError("only the coincidence limit is available")
    kw = _wavenumber(omega, k)
    a1 = IM_ISO_SERIES[1]
    b1 = IM_DYAD_SERIES[0]
    d = np.eye(3)
    out = np.empty((2, 2, 3, 3))
    for i in range(2):
        for j in range(2):
            # -d_i d_j [a1 k^2 R^2 delta_pk + b1 k^2 R_p R_k]
            out[i, j] = -(2 * a1 * d[i, j] * d + b1 * (np.outer(d[i], d[j]) + np.outer(d[j], d[i])))
    out *= kw**3 / (4 * np.pi)
    return DerivedGreenBlock(1j * out, omega, Part.FREE)
