"""Frequency integrals for the open-system coefficients of a particle above a surface.

All coefficients share one spectral contraction::

    S_ij(w) = sum_pk Im G_pk(r0, r0, w) * Im[d_i G_pk d_j](r0, r0, w)

which is split into a free part (free tensor on both sides) and a surface
part (every product that involves the scattering tensor at least once).
The decoherence, dissipation, diffusion and drag integrals weight it with
``w**4 |alpha|**2`` times their own thermal factor and prefactor; each is
accumulated separately on a common adaptive node set in ``u = hbar w / kB T``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .green import free_green_coincidence_im, free_green_lateral_derivatives
from .physics import (
    SI,
    ConstantPolarizability,
    DrudeMedium,
    LorentzPolarizability,
    MediumModel,
    ParticleModel,
    PhysicalConstants,
    ThermalEnvironment,
    Vacuum,
    occupation,
    occupation_derivative,
    polarizability_at,
    polarizability_imaginary_axis,
)
from .quadrature import adaptive_panels
from .surface import (
    DEFAULT_KPAR,
    KParQuadrature,
    scattering_first_derivatives_imaginary_axis,
    scattering_tensors,
    scattering_trace_imaginary_axis,
)


@dataclass(frozen=True)
class SpectralGrid:
    """Frequency rule in ``u = hbar w / kB T``.

    ``panels`` equal panels on ``[0, u_max]`` seed the adaptive bisection,
    together with breakpoints at model resonances.
    """

    u_max: float = 60.0
    panels: int = 8
    target_rel_tol: float = 1e-9
    order: int = 16

    def __post_init__(self):
        if self.u_max < 40:
            raise ValueError("u_max must be >= 40")
        if self.panels < 4:
            raise ValueError("panels must be >= 4")
        if not self.target_rel_tol > 0:
            raise ValueError("target_rel_tol must be positive")

    def refined(self):
        """The grid used for self-convergence checks."""
        return SpectralGrid(1.5 * self.u_max, 2 * self.panels, self.target_rel_tol, self.order)

    def u_nodes(self):
        """Seed breakpoints (strictly increasing)."""
        return np.linspace(0.0, self.u_max, self.panels + 1)


@dataclass(frozen=True)
class Scenario:
    particle: ParticleModel
    medium: MediumModel
    z: float
    environment: ThermalEnvironment
    constants: PhysicalConstants = SI
    spectral: SpectralGrid = SpectralGrid()
    kpar: KParQuadrature = DEFAULT_KPAR
    cp2_cutoff: Optional[float] = None

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("height z must be positive")

    @property
    def temperature(self):
        return self.environment.temperature

    def with_(self, **changes):
        fields = dict(self.__dict__)
        fields.update(changes)
        return Scenario(**fields)


@dataclass(frozen=True)
class Split:
    """A quantity with free-space and surface-induced parts."""

    free: np.ndarray
    surface: np.ndarray

    @property
    def total(self):
        return self.free + self.surface

    def scaled(self, factor):
        return Split(self.free * factor, self.surface * factor)


@dataclass(frozen=True)
class CoefficientSet:
    lambda_ij: Optional[Split] = None
    gamma_ij: Optional[Split] = None
    d_ij: Optional[Split] = None
    xi_ij: Optional[Split] = None
    c2_ij: Optional[Split] = None
    c1_i: Optional[Split] = None
    u1: Optional[Split] = None
    u2: Optional[Split] = None
    provenance: str = ""


@dataclass(frozen=True)
class KernelSample:
    tau: float
    noise_ij: np.ndarray
    dissipation_ij: np.ndarray


# -- spectral contraction ---------------------------------------------------------

def _check_resonance(model):
    if isinstance(model, LorentzPolarizability) and model.gamma == 0:
        raise DomainError("undamped Lorentz resonance lies on the real frequency axis; set gamma > 0")


def _free_blocks(omegas, k):
    # both blocks are monomials in w / c; evaluate once at unit wavenumber
    kw = omegas / k.c
    g1 = free_green_coincidence_im(k.c, k)
    d1 = free_green_lateral_derivatives(k.c, k).values.imag
    return kw[:, None, None] * g1, kw[:, None, None, None, None] ** 3 * d1


def green_samples(scenario: Scenario, omegas):
    """Imaginary-part-complete tensors on a frequency array.

    Returns ``(g0_im, d0_im, gs, ds)`` where the free blocks are real
    (imaginary parts only) and the scattering blocks are complex.
    """
    omegas = np.asarray(omegas, dtype=float)
    k = scenario.constants
    g0, d0 = _free_blocks(omegas, k)
    if isinstance(scenario.medium, Vacuum):
        gs = np.zeros(omegas.shape + (3, 3), dtype=complex)
        ds = np.zeros(omegas.shape + (2, 2, 3, 3), dtype=complex)
    else:
        gs, ds, _ = scattering_tensors(omegas, scenario.z, scenario.medium, scenario.kpar, k)
    return g0, d0, gs, ds


def contractions(scenario: Scenario, omegas):
    """Free and surface parts of ``S_ij``, each of shape ``(n, 2, 2)``."""
    g0, d0, gs, ds = green_samples(scenario, omegas)
    return _contract(g0, d0, gs.imag, ds.imag)


def _contract(g0, d0, gsi, dsi):
    free = np.einsum("npk,nijpk->nij", g0, d0)
    surf = (
        np.einsum("npk,nijpk->nij", g0, dsi)
        + np.einsum("npk,nijpk->nij", gsi, d0)
        + np.einsum("npk,nijpk->nij", gsi, dsi)
    )
    return free, surf


def _resonance_frequencies(scenario: Scenario):
    pts = []
    a = scenario.particle.polarizability
    if isinstance(a, LorentzPolarizability):
        pts += [a.omega0 + s * a.gamma for s in (-5, -1, 0, 1, 5)]
    m = scenario.medium
    if isinstance(m, DrudeMedium):
        wsp = m.omega_p / np.sqrt(2.0)
        pts += [m.gamma_d] + [wsp + s * m.gamma_d for s in (-5, 0, 5)]
    return [p for p in pts if p > 0]


@dataclass(frozen=True)
class SpectralIntegral:
    """Accepted nodes of the thermal frequency integral and the raw samples on them."""

    u: np.ndarray
    weights: np.ndarray
    omega: np.ndarray
    power: np.ndarray     # w**4 |alpha(w)|**2
    s_free: np.ndarray    # (n, 2, 2)
    s_surface: np.ndarray
    error: np.ndarray
    g_free_im: np.ndarray  # (n, 3, 3) raw blocks, kept for independent re-assembly
    g_surf_im: np.ndarray
    d_free_im: np.ndarray  # (n, 2, 2, 3, 3)
    d_surf_im: np.ndarray


def spectral_integral(scenario: Scenario, grid: Optional[SpectralGrid] = None) -> SpectralIntegral:
    """Adaptive node set for the ``n(n+1)``-weighted contraction integrals (T > 0)."""
    T = scenario.temperature
    if T <= 0:
        raise DomainError("spectral_integral requires T > 0")
    grid = grid or scenario.spectral
    _check_resonance(scenario.particle.polarizability)
    k = scenario.constants
    scale = k.kB * T / k.hbar
    env = scenario.environment
    alpha = scenario.particle.polarizability
    seen_u, seen_raw = [], []

    def raw(u):
        w = u * scale
        a = polarizability_at(alpha, w)
        power = w**4 * np.abs(a) ** 2
        g0, d0, gs, ds = green_samples(scenario, w)
        free, surf = _contract(g0, d0, gs.imag, ds.imag)
        m = w.size
        out = np.concatenate(
            [power[:, None], free.reshape(m, 4), surf.reshape(m, 4), g0.reshape(m, 9), gs.imag.reshape(m, 9),
             d0.reshape(m, 36), ds.imag.reshape(m, 36)],
            axis=1,
        )
        seen_u.append(u)
        seen_raw.append(out)
        return out

    def integrand(u):
        r = raw(u)
        nn = occupation(u * scale, env, k)
        nn = nn * (nn + 1.0)
        return (r[:, :1] * nn[:, None]) * r[:, 1:9]

    bps = set(grid.u_nodes().tolist())
    bps.update(p / scale for p in _resonance_frequencies(scenario) if p / scale < grid.u_max)
    res = adaptive_panels(integrand, sorted(bps), order=grid.order, rtol=grid.target_rel_tol)
    all_u = np.concatenate(seen_u)
    all_raw = np.concatenate(seen_raw)
    idx = np.argsort(all_u, kind="stable")
    pos = idx[np.searchsorted(all_u[idx], res.nodes)]
    r = all_raw[pos]
    return SpectralIntegral(
        u=res.nodes,
        weights=res.weights,
        omega=res.nodes * scale,
        power=r[:, 0],
        s_free=r[:, 1:5].reshape(-1, 2, 2),
        s_surface=r[:, 5:9].reshape(-1, 2, 2),
        error=res.error,
        g_free_im=r[:, 9:18].reshape(-1, 3, 3),
        g_surf_im=r[:, 18:27].reshape(-1, 3, 3),
        d_free_im=r[:, 27:63].reshape(-1, 2, 2, 3, 3),
        d_surf_im=r[:, 63:99].reshape(-1, 2, 2, 3, 3),
    )


def _accumulate(si: SpectralIntegral, thermal, prefactor, k, T):
    """prefactor * int dw w^4 |alpha|^2 thermal(w) S(w), split free/surface."""
    w = si.weights * (k.kB * T / k.hbar) * si.power * thermal
    free = prefactor * np.einsum("n,nij->ij", w, si.s_free)
    surf = prefactor * np.einsum("n,nij->ij", w, si.s_surface)
    return Split(free, surf)


def _zero22():
    return Split(np.zeros((2, 2)), np.zeros((2, 2)))


def lambda_coefficient(scenario: Scenario, si: Optional[SpectralIntegral] = None) -> Split:
    """Localisation rate ``Lambda_ij`` (1/(m**2 s)); exactly zero at T = 0."""
    T = scenario.temperature
    if T == 0:
        return _zero22()
    si = si or spectral_integral(scenario)
    k = scenario.constants
    n = occupation(si.omega, scenario.environment, k)
    return _accumulate(si, n * (n + 1.0), 2.0 * k.mu0**2 / np.pi, k, T)


def gamma_coefficient(scenario: Scenario, si: Optional[SpectralIntegral] = None) -> Split:
    """Momentum damping rate ``Gamma_ij`` (1/s), weighted by ``|dn/dw|``; zero at T = 0."""
    T = scenario.temperature
    if T == 0:
        return _zero22()
    si = si or spectral_integral(scenario)
    k = scenario.constants
    dn = np.abs(occupation_derivative(si.omega, scenario.environment, k))
    pref = k.hbar * k.mu0**2 / (np.pi * scenario.particle.mass)
    return _accumulate(si, dn, pref, k, T)


def diffusion_coefficient(scenario: Scenario, si: Optional[SpectralIntegral] = None) -> Split:
    """Momentum diffusion ``D_ij`` (kg**2 m**2 / s**3); zero at T = 0.

    Deliberately does not reuse the contraction or thermal weight of
    :func:`lambda_coefficient`: the tensor sum is formed from the raw
    imaginary Green blocks as (total x total) minus (free x free), and
    ``n (n + 1)`` is written as ``1 / (4 sinh(u / 2)**2)``.  Agreement with
    ``2 hbar**2 Lambda`` is therefore a check on the assembly.
    """
    T = scenario.temperature
    if T == 0:
        return _zero22()
    si = si or spectral_integral(scenario)
    k = scenario.constants
    g_tot = si.g_free_im + si.g_surf_im
    d_tot = si.d_free_im + si.d_surf_im
    # sum over the tensor indices p, k of Im G_pk * Im[d_i G_pk d_j]
    s_tot = (g_tot[:, None, None, :, :] * d_tot).sum(axis=(-2, -1))
    s_free = (si.g_free_im[:, None, None, :, :] * si.d_free_im).sum(axis=(-2, -1))
    dw = si.weights * (k.kB * T / k.hbar)
    nn = 0.25 / np.sinh(0.5 * si.u) ** 2
    w = (4.0 * k.hbar**2 * k.mu0**2 / np.pi) * dw * nn * si.power
    free = np.tensordot(w, s_free, axes=1)
    return Split(free, np.tensordot(w, s_tot, axes=1) - free)


def drag_coefficient(scenario: Scenario, si: Optional[SpectralIntegral] = None) -> Split:
    """Linear drag ``xi_ij`` (kg/s); undefined at T = 0."""
    T = scenario.temperature
    if T == 0:
        raise DomainError("drag coefficient is undefined at T = 0")
    si = si or spectral_integral(scenario)
    k = scenario.constants
    n = occupation(si.omega, scenario.environment, k)
    pref = 2.0 * k.hbar**2 * k.mu0**2 / (k.kB * T * np.pi)
    return _accumulate(si, n * (n + 1.0), pref, k, T)


# -- Casimir-Polder potentials ------------------------------------------------------

def _xi_breakpoints(scenario: Scenario):
    k = scenario.constants
    s = k.c / (2.0 * scenario.z)
    top = 40.0 * s
    pts = [0.0] + [s * f for f in (1e-3, 1e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 20.0, 40.0)]
    a = scenario.particle.polarizability
    if isinstance(a, LorentzPolarizability):
        pts += [a.omega0 * f for f in (0.1, 0.3, 1.0, 3.0, 10.0)]
    m = scenario.medium
    if isinstance(m, DrudeMedium):
        pts += [m.gamma_d, m.omega_p]
    return sorted({p for p in pts if p <= top})


def cp_potential_vacuum(scenario: Scenario, rtol=None) -> float:
    """Zero-point part of the first-order potential, along imaginary frequencies."""
    if isinstance(scenario.medium, Vacuum):
        return 0.0
    k = scenario.constants
    a = scenario.particle.polarizability

    def f(xi):
        return (xi**2 * polarizability_imaginary_axis(a, xi)
                * scattering_trace_imaginary_axis(xi, scenario.z, scenario.medium, scenario.kpar, k))

    rtol = rtol or scenario.spectral.target_rel_tol
    res = adaptive_panels(f, _xi_breakpoints(scenario), order=scenario.spectral.order, rtol=rtol)
    return float(k.hbar * k.mu0 / (2.0 * np.pi) * res.value[0])


def _trace_real_axis(scenario: Scenario, omegas):
    gs, _, _ = scattering_tensors(omegas, scenario.z, scenario.medium, scenario.kpar, scenario.constants)
    return np.trace(gs, axis1=1, axis2=2)


def cp_potential_thermal(scenario: Scenario, rtol=None) -> float:
    """Thermal part ``-(hbar mu0 / pi) int dw w^2 n(w) Im[alpha Tr G_s]``."""
    T = scenario.temperature
    if T == 0 or isinstance(scenario.medium, Vacuum):
        return 0.0
    _check_resonance(scenario.particle.polarizability)
    k = scenario.constants
    scale = k.kB * T / k.hbar
    a = scenario.particle.polarizability

    def f(u):
        w = u * scale
        n = occupation(w, scenario.environment, k)
        return w**2 * n * np.imag(polarizability_at(a, w) * _trace_real_axis(scenario, w))

    grid = scenario.spectral
    bps = set(grid.u_nodes().tolist())
    bps.update(p / scale for p in _resonance_frequencies(scenario) if p / scale < grid.u_max)
    res = adaptive_panels(f, sorted(bps), order=grid.order, rtol=rtol or grid.target_rel_tol)
    return float(-k.hbar * k.mu0 / np.pi * scale * res.value[0])


def cp_potential_first(scenario: Scenario) -> Split:
    """First-order potential (J); the free part is a constant self-energy and reported as zero."""
    u = cp_potential_vacuum(scenario) + cp_potential_thermal(scenario)
    return Split(np.float64(0.0), np.float64(u))


def cp_force_vertical(scenario: Scenario, rel_step=1e-3) -> float:
    """``-dU/dz`` of the first-order potential from a five-point central difference."""
    h = rel_step * scenario.z
    u = [cp_potential_first(scenario.with_(z=scenario.z + s * h)).total for s in (-2, -1, 1, 2)]
    return float(-(u[0] - 8 * u[1] + 8 * u[2] - u[3]) / (12 * h))


def cp_force_lateral(scenario: Scenario) -> Split:
    """Lateral gradient ``d_i U`` of the first-order potential (N).

    Moving the particle sideways moves both arguments of the tensor, so the
    gradient is ``Tr Im[(d/dr1_i + d/dr2_i) G]``; it is integrated with the
    same spectral weights as the potential itself.
    """
    if isinstance(scenario.medium, Vacuum):
        return Split(np.zeros(2), np.zeros(2))
    k = scenario.constants
    a = scenario.particle.polarizability
    T = scenario.temperature

    def grad_trace(omegas):
        _, _, d1 = scattering_tensors(omegas, scenario.z, scenario.medium, scenario.kpar, k)
        # derivative along r2 is the negative of that along r1 for a laterally invariant tensor
        return np.trace(d1 + (-d1), axis1=2, axis2=3)

    out = np.zeros(2)
    if T > 0:
        _check_resonance(a)
        scale = k.kB * T / k.hbar

        def f(u):
            w = u * scale
            n = occupation(w, scenario.environment, k)
            return (w**2 * n)[:, None] * np.imag(polarizability_at(a, w)[:, None] * grad_trace(w))

        res = adaptive_panels(f, scenario.spectral.u_nodes(), order=scenario.spectral.order,
                              rtol=scenario.spectral.target_rel_tol)
        out += -k.hbar * k.mu0 / np.pi * scale * res.value
    # zero-point part along imaginary frequencies
    def g(xi):
        d1 = scattering_first_derivatives_imaginary_axis(xi, scenario.z, scenario.medium, scenario.kpar, k)
        tr = np.trace(d1 + (-d1), axis1=2, axis2=3).real
        return (xi**2 * polarizability_imaginary_axis(a, xi))[:, None] * tr

    res = adaptive_panels(g, _xi_breakpoints(scenario), order=scenario.spectral.order,
                          rtol=scenario.spectral.target_rel_tol)
    out += k.hbar * k.mu0 / (2.0 * np.pi) * res.value
    return Split(np.zeros(2), out)


def _cp2_cutoff(scenario: Scenario):
    if scenario.cp2_cutoff is not None:
        return scenario.cp2_cutoff
    a = scenario.particle.polarizability
    if isinstance(a, LorentzPolarizability):
        return 10.0 * a.omega0
    raise DomainError("cp2_cutoff must be set for non-resonant polarizability models")


def second_order_terms(scenario: Scenario):
    """Second-order potential and its lateral curvature coefficient.

    Returns ``(u2, c2)`` as :class:`Split`.  The real part of the free tensor
    at coincidence is a divergent self-energy and is dropped, so both free
    parts vanish.  The zero-point weight is regulated by ``exp(-w / cutoff)``.
    """
    zero = Split(np.float64(0.0), np.float64(0.0)), Split(np.zeros((2, 2)), np.zeros((2, 2)))
    a = scenario.particle.polarizability
    if isinstance(scenario.medium, Vacuum):
        return zero
    if isinstance(a, (LorentzPolarizability, ConstantPolarizability)) and a.alpha0 == 0:
        return zero
    _check_resonance(a)
    k = scenario.constants
    T = scenario.temperature
    wc = _cp2_cutoff(scenario)
    top = 40.0 * wc
    if T > 0:
        top = max(top, scenario.spectral.u_max * k.kB * T / k.hbar)

    def f(w):
        g0, d0, gs, ds = green_samples(scenario, w)
        im_g = g0 + gs.imag
        im_d = d0 + ds.imag
        weight = np.exp(-w / wc)
        if T > 0:
            weight = weight + 2.0 * occupation(w, scenario.environment, k)
        pw = weight * w**4 * np.abs(polarizability_at(a, w)) ** 2
        u2 = np.einsum("npk,npk->n", gs.real, im_g)
        c2 = np.einsum("nijpk,npk->nij", ds.real, im_g) + np.einsum("npk,njipk->nij", gs.real, im_d)
        return pw[:, None] * np.concatenate([u2[:, None], c2.reshape(-1, 4)], axis=1)

    pts = {0.0, top}
    pts.update(wc * f for f in (0.1, 1.0, 5.0, 10.0, 20.0))
    pts.update(p for p in _resonance_frequencies(scenario))
    s = k.c / scenario.z
    pts.update(s * f for f in (0.1, 1.0, 10.0))
    if T > 0:
        pts.update(k.kB * T / k.hbar * f for f in (1.0, 5.0, 20.0))
    bps = sorted(p for p in pts if 0 <= p <= top)
    res = adaptive_panels(f, bps, order=scenario.spectral.order, rtol=scenario.spectral.target_rel_tol,
                          max_panels=16384)
    pref = k.hbar * k.mu0**2 / (2.0 * np.pi)
    u2 = Split(np.float64(0.0), np.float64(pref * res.value[0]))
    c2 = Split(np.zeros((2, 2)), pref * res.value[1:].reshape(2, 2))
    return u2, c2


def cp_potential_second(scenario: Scenario) -> Split:
    return second_order_terms(scenario)[0]


def c2_coefficient(scenario: Scenario) -> Split:
    return second_order_terms(scenario)[1]


# -- all at once --------------------------------------------------------------------

COEFFICIENT_NAMES = ("lambda", "gamma", "d", "xi", "u1", "c1", "u2", "c2")


def compute_coefficients(scenario: Scenario, which=("lambda", "gamma", "d", "xi", "u1", "c1"),
                         provenance: str = "") -> CoefficientSet:
    """Evaluate the requested coefficients, sharing the spectral node set."""
    which = set(which)
    unknown = which - set(COEFFICIENT_NAMES)
    if unknown:
        raise ValueError(f"unknown coefficients: {sorted(unknown)}")
    out = {}
    T = scenario.temperature
    thermal = which & {"lambda", "gamma", "d", "xi"}
    si = spectral_integral(scenario) if thermal and T > 0 else None
    if "lambda" in which:
        out["lambda_ij"] = lambda_coefficient(scenario, si)
    if "gamma" in which:
        out["gamma_ij"] = gamma_coefficient(scenario, si)
    if "d" in which:
        out["d_ij"] = diffusion_coefficient(scenario, si)
    if "xi" in which:
        out["xi_ij"] = drag_coefficient(scenario, si)
    if "u1" in which:
        out["u1"] = cp_potential_first(scenario)
    if "c1" in which:
        out["c1_i"] = cp_force_lateral(scenario)
    if which & {"u2", "c2"}:
        u2, c2 = second_order_terms(scenario)
        if "u2" in which:
            out["u2"] = u2
        if "c2" in which:
            out["c2_ij"] = c2
    return CoefficientSet(provenance=provenance, **out)


# -- finite-time bath kernels --------------------------------------------------------

@dataclass(frozen=True)
class KernelGrid:
    """Midpoint grid in ``u = hbar w / kB T`` for the double frequency integrals."""

    nodes: int = 96
    u_max: float = 32.0

    def __post_init__(self):
        if self.nodes < 8 or not self.u_max > 0:
            raise ValueError("kernel grid needs >= 8 nodes and u_max > 0")


class KernelTable:
    """Noise and dissipation kernels of one scenario on a fixed frequency grid.

    The double integrals over ``(w, w')`` reduce to sums of cosines (noise) or
    sines (dissipation) of ``(w +- w') tau`` whose coefficient matrices are
    precomputed here, so many ``tau`` values are cheap.  Only the real part
    is kept; the imaginary part cancels between ``(w, w')`` and ``(w', w)``.
    """

    def __init__(self, scenario: Scenario, grid: KernelGrid = KernelGrid()):
        T = scenario.temperature
        if T <= 0:
            raise DomainError("bath kernels are evaluated at T > 0 only")
        k = scenario.constants
        self.scenario = scenario
        scale = k.kB * T / k.hbar
        du = grid.u_max / grid.nodes
        u = (np.arange(grid.nodes) + 0.5) * du
        w = u * scale
        dw = du * scale
        g0, d0, gs, ds = green_samples(scenario, w)
        img = g0 + gs.imag
        imd = d0 + ds.imag
        # A_ij(w, w') = Im D_ij(w) : Im G(w') + Im G(w) : Im D_ji(w')
        a = np.einsum("aijpk,bpk->abij", imd, img) + np.einsum("apk,bjipk->abij", img, imd)
        a *= (w**2 * dw)[:, None, None, None] * (w**2 * dw)[None, :, None, None]
        al = polarizability_at(scenario.particle.polarizability, w)
        n = occupation(w, scenario.environment, k)
        A, B = al[:, None], al[None, :]
        N1, N2 = n[:, None], n[None, :]
        mod2 = np.abs(A) ** 2
        # coefficients of cos/sin((w + w') tau) and of cos/sin((w - w') tau)
        noise_sum = mod2 * ((N1 + 1) * (N2 + 1) + N1 * N2) + A * B.conj() * (N1 + 1) * (N2 + 1) + A.conj() * B * N1 * N2
        noise_dif = mod2 * ((N1 + 1) * N2 + N1 * (N2 + 1)) + A * B * (N1 + 1) * N2 + A.conj() * B.conj() * N1 * (N2 + 1)
        diss_sum = mod2 * ((N1 + 1) * (N2 + 1) - N1 * N2) + A * B.conj() * (N1 + 1) * (N2 + 1) - A.conj() * B * N1 * N2
        diss_dif = mod2 * ((N1 + 1) * N2 - N1 * (N2 + 1)) + A * B * (N1 + 1) * N2 - A.conj() * B.conj() * N1 * (N2 + 1)
        pref = k.hbar**2 * k.mu0**2 / (2.0 * np.pi**2)
        self._a = pref * a
        self._coef = {
            "noise": (noise_sum.real, noise_dif.real),
            "diss": (diss_sum.real, diss_dif.real),
        }
        self.omega = w
        self._plus = w[:, None] + w[None, :]
        self._minus = w[:, None] - w[None, :]

    def _eval(self, kind, tau, fn):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        cs, cd = self._coef[kind]
        out = np.empty((tau.size, 2, 2))
        for m, t in enumerate(tau):
            weight = cs * fn(self._plus * t) + cd * fn(self._minus * t)
            out[m] = np.einsum("ab,abij->ij", weight, self._a)
        return out

    def noise(self, tau):
        """Noise kernel at each ``tau``; shape ``(len(tau), 2, 2)``."""
        return self._eval("noise", tau, np.cos)

    def dissipation(self, tau):
        return self._eval("diss", tau, np.sin)

    def sample(self, tau) -> KernelSample:
        return KernelSample(float(tau), self.noise(tau)[0], self.dissipation(tau)[0])


def kernel_sample(scenario: Scenario, tau, grid: KernelGrid = KernelGrid()) -> KernelSample:
    """Noise and dissipation kernels at a single delay ``tau`` (s)."""
    return KernelTable(scenario, grid).sample(tau)


def noise_kernel(scenario: Scenario, tau, grid: KernelGrid = KernelGrid()) -> KernelSample:
    return kernel_sample(scenario, tau, grid)


def dissipation_kernel(scenario: Scenario, tau, grid: KernelGrid = KernelGrid()) -> KernelSample:
    return kernel_sample(scenario, tau, grid)


def regularised_noise_integral(table: KernelTable, tau_c: float):
    """``(1 / 2 hbar**2) int_0^inf dtau N(tau) exp(-(tau/tau_c)**2)``.

    The tau integral of each cosine is done in closed form,
    ``int_0^inf cos(x tau) exp(-(tau/tau_c)**2) dtau = (sqrt(pi) tau_c / 2) exp(-(x tau_c / 2)**2)``,
    so only the frequency grid is discrete.  A tau quadrature of the sampled
    kernel would not converge: on a discrete grid the ``w = w'`` terms never
    dephase.  The grid resolves the smoothed delta only while ``tau_c`` stays
    below about ``1 / dw``.
    """
    k = table.scenario.constants
    cs, cd = table._coef["noise"]

    def transform(x):
        return 0.5 * np.sqrt(np.pi) * tau_c * np.exp(-((x * tau_c / 2.0) ** 2))

    weight = cs * transform(table._plus) + cd * transform(table._minus)
    return np.einsum("ab,abij->ij", weight, table._a) / (2.0 * k.hbar**2)


def default_tau_cs(scenario: Scenario):
    """Regulator widths ``(2, 3, 4) hbar / kB T`` suited to the default kernel grid."""
    k = scenario.constants
    return np.array([2.0, 3.0, 4.0]) * k.hbar / (k.kB * scenario.temperature)


def extrapolated_lambda(table: KernelTable, tau_cs=None):
    """Quadratic extrapolation in ``1/tau_c**2`` of the regularised noise integral to ``tau_c -> inf``.

    Returns ``(limit, samples)`` with ``samples[m]`` the regularised value at ``tau_cs[m]``.
    """
    tau_cs = default_tau_cs(table.scenario) if tau_cs is None else np.asarray(tau_cs, dtype=float)
    samples = np.stack([regularised_noise_integral(table, t) for t in tau_cs])
    x = 1.0 / tau_cs**2
    V = np.vander(x, len(x))
    coef = np.linalg.solve(V, samples.reshape(len(x), -1))
    return coef[-1].reshape(2, 2), samples
