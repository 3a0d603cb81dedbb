"""Planar scattering Green tensor from in-plane wavenumber integrals.

The reflected part of the tensor above a half-space is written as a single
integral over the normal decay constant ``kappa`` along a contour that runs
from ``-i k0`` (normal incidence) through the light line at ``kappa = 0``
into the evanescent region::

    G_s = (1 / 8 pi) \\int d kappa  exp(-2 kappa z) F(kappa)

On the propagating leg ``kappa = -i q`` with ``q`` the vacuum normal
wavenumber, so the exponential becomes an outgoing phase and there is no
``1/kappa`` singularity at the light line.  The evanescent leg is mapped to
``v = 2 kappa z`` and truncated at ``evanescent_cutoff``.

Both legs are split into Gauss-Legendre panels.  The propagating leg is cut
so that no panel carries more than ``MAX_PHASE`` radians of phase; panels are
graded geometrically towards the projections of the reflection-coefficient
poles and branch points onto each leg, which keeps the rules accurate for
strongly metallic media whose structure hugs the light line.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from . import kernels
from .errors import DomainError, QuadratureError
from .green import DerivedGreenBlock, GreenBlock, Part
from .physics import (
    SI,
    MediumModel,
    PerfectMirror,
    PhysicalConstants,
    Vacuum,
    permittivity_at,
    permittivity_imaginary_axis,
)
from .quadrature import gauss_legendre

MAX_PHASE = 20.0
EVANESCENT_BASE = (0.0, 1.0, 4.0, 12.0)
CHUNK_NODES = 1 << 18
GRADE_RATIO = 4.0


@dataclass(frozen=True)
class SurfaceResponse:
    k_par: np.ndarray
    kappa_perp: np.ndarray
    r_s: np.ndarray
    r_p: np.ndarray


@dataclass(frozen=True)
class KParQuadrature:
    """Panel rule for the in-plane wavenumber integral.

    Parameters
    ----------
    propagating_nodes : int
        Gauss-Legendre nodes per propagating panel.
    evanescent_nodes : int
        Nodes spread over the four base evanescent panels
        ``[0, 1, 4, 12, cutoff]``; graded panels use the same per-panel count.
    evanescent_cutoff : float
        Truncation of ``v = 2 kappa z``; the dropped tail is below ``exp(-cutoff)``.
    target_rel_tol : float
        Accepted change between a rule and its node-doubled refinement.
    max_doublings : int
        Further refinements tried before giving up.
    """

    propagating_nodes: int = 64
    evanescent_nodes: int = 128
    evanescent_cutoff: float = 40.0
    target_rel_tol: float = 1e-10
    max_doublings: int = 1

    def __post_init__(self):
        if self.propagating_nodes < 8 or self.evanescent_nodes < 8:
            raise ValueError("k_par node counts must be >= 8")
        if self.evanescent_cutoff < 30:
            raise ValueError("evanescent_cutoff must be >= 30")
        if not self.target_rel_tol > 0:
            raise ValueError("target_rel_tol must be positive")
        if self.max_doublings < 0:
            raise ValueError("max_doublings must be >= 0")

    def refined(self, factor=2):
        return KParQuadrature(
            self.propagating_nodes * factor,
            self.evanescent_nodes * factor,
            self.evanescent_cutoff,
            self.target_rel_tol,
            self.max_doublings,
        )


DEFAULT_KPAR = KParQuadrature()


def _upper_root(z):
    return kernels._root_upper_np(z)


def fresnel(omega, k_par, medium: MediumModel, k: PhysicalConstants = SI) -> SurfaceResponse:
    """Half-space reflection coefficients at real frequency.

    ``kappa_perp`` follows the branch ``Re kappa >= 0`` (evanescent) and
    ``kappa = -i k_z`` with ``k_z >= 0`` (propagating).
    """
    if not omega > 0:
        raise DomainError("fresnel requires omega > 0")
    k_par = np.asarray(k_par, dtype=float)
    if np.any(k_par < 0):
        raise DomainError("fresnel requires k_par >= 0")
    k0sq = (omega / k.c) ** 2
    kz = _upper_root(k0sq - k_par**2 + 0j)
    kappa = -1j * kz
    if isinstance(medium, PerfectMirror):
        rs = np.full(k_par.shape, -1.0 + 0j)
        rp = np.full(k_par.shape, 1.0 + 0j)
    elif isinstance(medium, Vacuum):
        rs = np.zeros(k_par.shape, dtype=complex)
        rp = np.zeros(k_par.shape, dtype=complex)
    else:
        eps = permittivity_at(medium, omega)
        rs, rp = kernels.reflection_np(kz, k0sq, eps)
    return SurfaceResponse(k_par, kappa[()], rs[()], rp[()])


# -- contour layout -------------------------------------------------------------

def _singularities(k0, eps):
    """Poles of r_p and branch points of the transmitted wavenumber, as k_z values."""
    if eps is None:
        return np.empty(0, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        pts = [k0 / np.sqrt(eps + 1.0 + 0j), 1j * k0 * np.sqrt(eps - 1.0 + 0j)]
    pts = np.array(pts + [-p for p in pts], dtype=complex)
    return pts[np.isfinite(pts)]


def _graded(a, b, points, dists, base):
    """Add geometric breakpoints around each projected singularity."""
    bps = list(base)
    span = b - a
    for p, d in zip(points, dists):
        d = max(d, 1e-12 * span)
        if d >= 0.5 * span:
            continue
        h = d
        while h < span:
            for x in (p - h, p + h):
                if a < x < b:
                    bps.append(x)
            h *= GRADE_RATIO
        if a < p < b:
            bps.append(p)
    return np.unique(np.clip(bps, a, b))


@dataclass(frozen=True)
class _Contour:
    kz: np.ndarray
    w: np.ndarray
    k0sq: np.ndarray


def _real_axis_contour(omega, z, eps, quad: KParQuadrature, k):
    k0 = omega / k.c
    sing = _singularities(k0, eps)
    # propagating leg, parameter q = k_z in [0, k0]
    n_phase = max(1, int(np.ceil(2.0 * k0 * z / MAX_PHASE)))
    base = np.linspace(0.0, k0, n_phase + 1)
    proj = np.clip(sing.real, 0.0, k0)
    bq = _graded(0.0, k0, proj, np.abs(sing - proj), base)
    xq, wq = gauss_legendre(quad.propagating_nodes)
    width = np.diff(bq)
    q = (bq[:-1, None] + width[:, None] * xq).ravel()
    wq = (width[:, None] * wq).ravel()
    w_prop = 1j * np.exp(2j * q * z) * wq
    # evanescent leg, parameter v = 2 kappa z, k_z = i kappa
    cut = quad.evanescent_cutoff
    t = -1j * sing * 2.0 * z
    proj = np.clip(t.real, 0.0, cut)
    bv = _graded(0.0, cut, proj, np.abs(t - proj), EVANESCENT_BASE + (cut,))
    xv, wv = gauss_legendre(max(2, quad.evanescent_nodes // 4))
    width = np.diff(bv)
    v = (bv[:-1, None] + width[:, None] * xv).ravel()
    wv = (width[:, None] * wv).ravel()
    w_ev = np.exp(-v) * wv / (2.0 * z)
    kz = np.concatenate([q + 0j, 1j * v / (2.0 * z)])
    w = np.concatenate([w_prop, w_ev + 0j]) / (8.0 * np.pi)
    return _Contour(kz, w, np.full(kz.shape, k0 * k0))


def _imaginary_axis_contour(xi, z, eps, quad: KParQuadrature, k):
    """Contour for frequency ``i xi``: kappa runs from xi/c to infinity."""
    kap0 = xi / k.c
    k0 = 1j * kap0
    sing = _singularities(k0, eps)
    cut = quad.evanescent_cutoff
    t = 2.0 * z * (-1j * sing - kap0)
    proj = np.clip(t.real, 0.0, cut)
    bv = _graded(0.0, cut, proj, np.abs(t - proj), EVANESCENT_BASE + (cut,))
    xv, wv = gauss_legendre(max(2, quad.evanescent_nodes // 4))
    width = np.diff(bv)
    v = (bv[:-1, None] + width[:, None] * xv).ravel()
    wv = (width[:, None] * wv).ravel()
    kappa = kap0 + v / (2.0 * z)
    w = np.exp(-2.0 * kap0 * z - v) * wv / (2.0 * z) / (8.0 * np.pi)
    return _Contour(1j * kappa, w + 0j, np.full(v.shape, -kap0 * kap0))


def _medium_eps(medium, omega, imaginary):
    if isinstance(medium, PerfectMirror):
        return None, True
    if imaginary:
        return complex(permittivity_imaginary_axis(medium, omega)), False
    return complex(permittivity_at(medium, omega)), False


def _sums(omegas, z, medium, quad, k, imaginary):
    """Raw column sums for each frequency; returns (values, l1) of shape (n, NCOL).

    Frequencies are batched so that no kernel call sees more than
    ``CHUNK_NODES`` contour nodes; far from the surface the propagating leg
    needs many panels per frequency.
    """
    mirror = isinstance(medium, PerfectMirror)
    values, l1s = [], []
    batch, total = [], 0

    def flush():
        sizes = [c.kz.size for c, _ in batch]
        seg = np.repeat(np.arange(len(batch)), sizes)
        kz = np.concatenate([c.kz for c, _ in batch])
        w = np.concatenate([c.w for c, _ in batch])
        k0sq = np.concatenate([c.k0sq for c, _ in batch])
        eps = np.concatenate([np.full(c.kz.shape, e) for c, e in batch])
        v, l1 = kernels.kpar_sums(kz, w, k0sq, eps, mirror, seg, len(batch))
        values.append(v)
        l1s.append(l1)

    for om in omegas:
        eps, _ = _medium_eps(medium, om, imaginary)
        c = (_imaginary_axis_contour if imaginary else _real_axis_contour)(om, z, eps, quad, k)
        if batch and total + c.kz.size > CHUNK_NODES:
            flush()
            batch, total = [], 0
        batch.append((c, 0j if eps is None else eps))
        total += c.kz.size
    if batch:
        flush()
    if not values:
        empty = np.zeros((0, kernels.NCOL), dtype=complex)
        return empty, empty.copy()
    return np.concatenate(values), np.concatenate(l1s)


def _converged_sums(omegas, z, medium, quad: KParQuadrature, k, imaginary=False):
    """Column sums checked against a node-doubled rule.

    Each real and imaginary component must agree to ``target_rel_tol`` of its
    own magnitude, with a floor of ``1e-5`` of its absolute sum for components
    that cancel, plus a rounding allowance.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if not z > 0:
        raise DomainError("height z must be positive")
    if np.any(omegas <= 0):
        raise DomainError("frequency must be positive")
    if isinstance(medium, Vacuum):
        return np.zeros((omegas.size, kernels.NCOL), dtype=complex)
    rtol = quad.target_rel_tol
    coarse, _ = _sums(omegas, z, medium, quad, k, imaginary)
    fine_q = quad.refined(2)
    fine, l1 = _sums(omegas, z, medium, fine_q, k, imaginary)
    todo = np.arange(omegas.size)
    for attempt in range(quad.max_doublings + 1):
        ok, worst = _agree(coarse[todo], fine[todo], l1[todo], rtol)
        if ok.all():
            return fine
        todo = todo[~ok]
        if attempt == quad.max_doublings:
            break
        fine_q = fine_q.refined(2)
        coarse[todo] = fine[todo]
        fine[todo], l1[todo] = _sums(omegas[todo], z, medium, fine_q, k, imaginary)
    raise QuadratureError(
        f"k_par integral not converged at {todo.size} frequencies (z={z:g})", float(worst)
    )


def _agree(a, b, l1, rtol):
    eps = np.finfo(float).eps
    out = np.ones(a.shape[0], dtype=bool)
    worst = 0.0
    for part in (np.real, np.imag):
        va, vb, m = part(a), part(b), part(l1)
        scale = np.maximum(np.abs(vb), 1e-5 * m)
        err = np.abs(va - vb)
        good = err <= rtol * scale + 256 * eps * m
        out &= np.all(good, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(scale > 0, err / scale, 0.0)
        worst = max(worst, float(np.max(rel, initial=0.0)))
    return out, worst


# -- assembled tensors ------------------------------------------------------------

def _green_from_sums(s):
    """(n, 3, 3) coincidence tensors."""
    g = np.zeros(s.shape[:1] + (3, 3), dtype=complex)
    g[:, 0, 0] = s[:, 0]
    g[:, 1, 1] = s[:, 0]
    g[:, 2, 2] = s[:, 1]
    return g


def _derivs_from_sums(s):
    """(n, 2, 2, 3, 3) lateral double-derivative blocks."""
    d = np.zeros(s.shape[:1] + (2, 2, 3, 3), dtype=complex)
    d[:, 0, 0, 0, 0] = s[:, 2]
    d[:, 0, 0, 1, 1] = s[:, 3]
    d[:, 0, 0, 2, 2] = s[:, 4]
    d[:, 1, 1, 0, 0] = s[:, 3]
    d[:, 1, 1, 1, 1] = s[:, 2]
    d[:, 1, 1, 2, 2] = s[:, 4]
    for i, j in ((0, 1), (1, 0)):
        d[:, i, j, 0, 1] = s[:, 5]
        d[:, i, j, 1, 0] = s[:, 5]
    return d


def _first_derivs_from_sums(s):
    """(n, 2, 3, 3): derivative with respect to the first point's lateral coordinate."""
    d = np.zeros(s.shape[:1] + (2, 3, 3), dtype=complex)
    d[:, 0, 0, 2] = s[:, 6]
    d[:, 0, 2, 0] = -s[:, 6]
    d[:, 1, 1, 2] = s[:, 6]
    d[:, 1, 2, 1] = -s[:, 6]
    return d


def scattering_tensors(omegas, z, medium, quad: KParQuadrature = DEFAULT_KPAR, k: PhysicalConstants = SI):
    """Coincidence scattering tensor and its lateral derivative blocks on a frequency array.

    Returns
    -------
    g : (n, 3, 3) complex
    d2 : (n, 2, 2, 3, 3) complex
        ``d2[:, i, j] = d/dr1_i G d/dr2_j`` at coincidence.
    d1 : (n, 2, 3, 3) complex
        ``d/dr1_i G``; the derivative along the second point is its negative.
    """
    s = _converged_sums(omegas, z, medium, quad, k)
    return _green_from_sums(s), _derivs_from_sums(s), _first_derivs_from_sums(s)


def scattering_green_coincidence(z, omega, medium, quad: KParQuadrature = DEFAULT_KPAR, k: PhysicalConstants = SI) -> GreenBlock:
    s = _converged_sums([omega], z, medium, quad, k)
    r0 = (0.0, 0.0, float(z))
    return GreenBlock(_green_from_sums(s)[0], float(omega), Part.SCATTERING, r0, r0)


def scattering_green_lateral_derivatives(z, omega, medium, quad: KParQuadrature = DEFAULT_KPAR, k: PhysicalConstants = SI) -> DerivedGreenBlock:
    s = _converged_sums([omega], z, medium, quad, k)
    return DerivedGreenBlock(_derivs_from_sums(s)[0], float(omega), Part.SCATTERING)


def scattering_trace_imaginary_axis(xis, z, medium, quad: KParQuadrature = DEFAULT_KPAR, k: PhysicalConstants = SI):
    """Real trace of the scattering tensor at imaginary frequency ``i xi``."""
    s = _converged_sums(xis, z, medium, quad, k, imaginary=True)
    return (2.0 * s[:, 0] + s[:, 1]).real


def scattering_first_derivatives_imaginary_axis(xis, z, medium, quad: KParQuadrature = DEFAULT_KPAR, k: PhysicalConstants = SI):
    """``d/dr1_i G_s`` at coincidence and frequency ``i xi``, shape ``(n, 2, 3, 3)``."""
    s = _converged_sums(xis, z, medium, quad, k, imaginary=True)
    return _first_derivs_from_sums(s)


def scattering_green(r1, r2, omega, medium, quad: KParQuadrature = DEFAULT_KPAR, k: PhysicalConstants = SI) -> GreenBlock:
    """Scattering tensor between two points above the surface (z > 0 for both).

    Evaluated at the fixed node rule of ``quad`` without a convergence check;
    intended for finite-difference cross-checks at small lateral separation.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if r1[2] <= 0 or r2[2] <= 0:
        raise DomainError("both points must lie above the surface")
    if not omega > 0:
        raise DomainError("frequency must be positive")
    if isinstance(medium, Vacuum):
        return GreenBlock(np.zeros((3, 3), dtype=complex), omega, Part.SCATTERING, tuple(r1), tuple(r2))
    zp = 0.5 * (r1[2] + r2[2])
    eps, _ = _medium_eps(medium, omega, False)
    c = _real_axis_contour(omega, zp, eps, quad, k)
    k0sq = c.k0sq[0]
    kz = c.kz
    if eps is None:
        rs = np.full(kz.shape, -1.0 + 0j)
        rp = np.full(kz.shape, 1.0 + 0j)
    else:
        rs, rp = kernels.reflection_np(kz, k0sq, eps)
    kpar = np.sqrt(np.maximum((k0sq - kz * kz).real, 0.0))
    kappa = -1j * kz
    dx, dy = r1[0] - r2[0], r1[1] - r2[1]
    rho = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    arg = kpar * rho
    j0, j1, j2 = jv(0, arg), jv(1, arg), jv(2, arg)
    c2, s2 = np.cos(2 * phi), np.sin(2 * phi)
    cp, sp = np.cos(phi), np.sin(phi)
    zero = np.zeros_like(j0)
    sblock = np.array(
        [[j0 + j2 * c2, j2 * s2, zero], [j2 * s2, j0 - j2 * c2, zero], [zero, zero, zero]]
    )
    k2 = kappa**2
    pblock = np.array(
        [
            [k2 * (j0 - j2 * c2), -k2 * j2 * s2, 2 * kpar * kappa * j1 * cp],
            [-k2 * j2 * s2, k2 * (j0 + j2 * c2), 2 * kpar * kappa * j1 * sp],
            [-2 * kpar * kappa * j1 * cp, -2 * kpar * kappa * j1 * sp, 2 * kpar**2 * j0],
        ]
    ) / k0sq
    f = sblock * rs + pblock * rp
    values = np.einsum("pkn,n->pk", f, c.w)
    return GreenBlock(values, float(omega), Part.SCATTERING, tuple(r1), tuple(r2))
