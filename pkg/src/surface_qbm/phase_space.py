"""Dynamical cross-checks: density-matrix evolution, momentum kicks and Langevin ensembles.

Random numbers come from counter-based Philox streams keyed by
``(seed, label, block)``; particles are processed in fixed-size blocks, so a
given seed yields identical results for any number of worker threads.
"""
from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .coefficients import CoefficientSet
from .errors import ConfigError, DomainError
from .physics import SI

BLOCK = 8192
NOISE_CHUNK = 256
TERMS = frozenset({"kinetic", "c1", "c2", "friction", "decoherence"})


# -- random streams ----------------------------------------------------------------

def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def stream(seed: int, label: str, block: int = 0) -> np.random.Generator:
    """Independent generator for one labelled block."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, label_key(label), int(block)])
    return np.random.Generator(np.random.Philox(ss))


def _blocks(n):
    return [(s, min(s + BLOCK, n)) for s in range(0, n, BLOCK)]


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- density matrix ----------------------------------------------------------------

@dataclass(frozen=True)
class DensityMatrixGrid:
    """``rho(x, x')`` on a uniform grid, normalised so that ``trace(rho) * dx = 1``."""

    x_nodes: np.ndarray
    values: np.ndarray
    time: float = 0.0

    @property
    def dx(self):
        return float(self.x_nodes[1] - self.x_nodes[0])

    @property
    def half_width(self):
        return 0.5 * float(self.x_nodes[-1] - self.x_nodes[0])

    def trace(self):
        return float(np.trace(self.values).real * self.dx)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.values - self.values.conj().T)))


def gaussian_state(sigma, n=256, half_width=None, x0=0.0, p0=0.0, hbar=SI.hbar) -> DensityMatrixGrid:
    """Pure Gaussian wavepacket; the grid spans ``5 sigma`` each side by default."""
    half_width = 5.0 * sigma if half_width is None else half_width
    x = np.linspace(-half_width, half_width, n, endpoint=False)
    psi = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / hbar)
    dx = x[1] - x[0]
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    return DensityMatrixGrid(x, np.outer(psi, psi.conj()), 0.0)


def _lateral(coeffs, name, shape):
    split = getattr(coeffs, name)
    if split is None:
        return np.zeros(shape)
    return np.asarray(split.total, dtype=float)


def evolve_density_matrix(grid: DensityMatrixGrid, coeffs: CoefficientSet, mass, dt, steps,
                          terms=frozenset({"decoherence"}), hbar=SI.hbar) -> DensityMatrixGrid:
    """Operator-split evolution of ``rho(x, x')`` along the x axis.

    Each step applies, in order, the exact decoherence factor, the spectral
    free-particle propagator, the potential phases and one explicit upwind
    friction step.
    """
    terms = frozenset(terms)
    bad = terms - TERMS
    if bad:
        raise ConfigError([f"unknown master-equation term {t!r}" for t in sorted(bad)])
    x = grid.x_nodes
    dx = grid.dx
    L = grid.half_width
    lam = _lateral(coeffs, "lambda_ij", (2, 2))[0, 0]
    gam = _lateral(coeffs, "gamma_ij", (2, 2))[0, 0]
    c1 = _lateral(coeffs, "c1_i", (2,))[0]
    c2 = _lateral(coeffs, "c2_ij", (2, 2))[0, 0]
    errors = []
    if "decoherence" in terms and lam * L**2 * dt >= 0.1:
        errors.append(f"decoherence step too large: Lambda L^2 dt = {lam * L**2 * dt:.3g} >= 0.1")
    kgrid = 2 * np.pi * np.fft.fftfreq(x.size, d=dx)
    if "kinetic" in terms:
        phase = hbar * np.max(kgrid**2) * dt / (2 * mass)
        if phase > np.pi:
            errors.append(f"kinetic step too large: max phase per step {phase:.3g} > pi")
    if "friction" in terms and gam * 2 * L * dt / dx > 1.0:
        errors.append(f"friction step violates CFL: Gamma 2L dt / dx = {gam * 2 * L * dt / dx:.3g} > 1")
    if errors:
        raise ConfigError(errors)
    sep = x[:, None] - x[None, :]
    deco = np.exp(-lam * sep**2 * dt) if "decoherence" in terms else None
    kin = None
    if "kinetic" in terms:
        kin = np.exp(-1j * hbar * (kgrid[:, None] ** 2 - kgrid[None, :] ** 2) * dt / (2 * mass))
    pot = np.ones_like(sep, dtype=complex)
    if "c1" in terms:
        pot *= np.exp(-1j * c1 * sep * dt / hbar)
    if "c2" in terms:
        pot *= np.exp(-1j * c2 * (x[:, None] ** 2 - x[None, :] ** 2) * dt / hbar)
    use_pot = bool(terms & {"c1", "c2"})
    rho = np.array(grid.values, dtype=complex)
    for _ in range(int(steps)):
        if deco is not None:
            rho *= deco
        if kin is not None:
            # rho(x, x') -> rho(k, k'): forward transform in x, inverse-conjugate in x'
            r = np.fft.ifft(np.fft.fft(rho, axis=0), axis=1)
            r *= kin
            rho = np.fft.fft(np.fft.ifft(r, axis=0), axis=1)
        if use_pot:
            rho *= pot
        if "friction" in terms:
            rho = kernels.friction_step(rho, x, gam, dt, dx)
    return DensityMatrixGrid(x, rho, grid.time + steps * dt)


# -- momentum kicks ----------------------------------------------------------------

@dataclass(frozen=True)
class KickEnsemble:
    samples: np.ndarray            # (n, 2) momentum impulses, kg m / s
    delta_t: float
    covariance_target: np.ndarray  # D * delta_t
    rng_seed: int


def _as_diffusion(coeffs):
    if isinstance(coeffs, CoefficientSet):
        return np.asarray(coeffs.d_ij.total, dtype=float)
    return np.asarray(coeffs, dtype=float)


def symmetric_sqrt(m):
    """Principal square root of a symmetric positive semidefinite matrix."""
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(vals)))) if vals.size else 0.0
    if np.any(vals < -tol):
        raise DomainError("matrix is not positive semidefinite")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def sample_kicks(coeffs, delta_t, n, seed, threads=1) -> KickEnsemble:
    """Gaussian impulses with covariance ``D * delta_t``."""
    if n < 1000:
        raise DomainError("kick ensembles need n >= 1000")
    d = _as_diffusion(coeffs)
    target = d * delta_t
    root = symmetric_sqrt(target)

    def draw(block):
        b, (lo, hi) = block
        g = stream(seed, "kicks", b).standard_normal((hi - lo, 2))
        return g @ root.T

    parts = _map(draw, list(enumerate(_blocks(n))), threads)
    return KickEnsemble(np.concatenate(parts), float(delta_t), target, int(seed))


def decoherence_factor(ensemble: KickEnsemble, a, hbar=SI.hbar) -> float:
    """``|<exp(-i dp . a / hbar)>|`` over the ensemble."""
    if ensemble.samples.shape[0] == 0:
        raise DomainError("empty ensemble")
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        return 1.0
    phase = ensemble.samples @ a / hbar
    return float(np.abs(np.mean(np.exp(-1j * phase))))


def bootstrap_std(ensemble: KickEnsemble, a, hbar=SI.hbar, n_boot=200, seed=0) -> float:
    """Bootstrap standard deviation of :func:`decoherence_factor`."""
    phase = np.exp(-1j * (ensemble.samples @ np.asarray(a, dtype=float) / hbar))
    rng = stream(seed, "bootstrap")
    n = phase.size
    out = np.empty(n_boot)
    for b in range(n_boot):
        out[b] = np.abs(np.mean(phase[rng.integers(0, n, n)]))
    return float(np.std(out, ddof=1))


# -- Langevin ensemble -------------------------------------------------------------

@dataclass(frozen=True)
class LangevinState:
    r: np.ndarray  # (n, 2), m
    p: np.ndarray  # (n, 2), kg m / s
    time: float = 0.0

    def __post_init__(self):
        if self.r.shape != self.p.shape or self.r.ndim != 2:
            raise ValueError("r and p must have equal (n, dim) shapes")


def evolve_langevin(state: LangevinState, gamma, d, mass, dt, steps, seed, threads=1) -> LangevinState:
    """Euler-Maruyama steps of ``dp = -2 Gamma p dt + sqrt(D dt) xi``, ``dr = p / M dt``."""
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    if gamma.size and 2.0 * np.max(np.abs(np.linalg.eigvals(gamma))) * dt > 0.1:
        raise ConfigError("Langevin step too large: 2 Gamma dt must stay below 0.1")
    drift = np.ascontiguousarray(2.0 * gamma)
    chol = np.ascontiguousarray(symmetric_sqrt(d * dt))
    dim = state.p.shape[1]
    steps = int(steps)
    inv_mass = 1.0 / mass

    def run(block):
        b, (lo, hi) = block
        r = np.array(state.r[lo:hi], dtype=float)
        p = np.array(state.p[lo:hi], dtype=float)
        g = stream(seed, "langevin", b)
        done = 0
        while done < steps:
            m = min(NOISE_CHUNK, steps - done)
            noise = g.standard_normal((m, hi - lo, dim))
            r, p = kernels.langevin_steps(r, p, noise, drift, chol, inv_mass, dt)
            done += m
        return r, p

    parts = _map(run, list(enumerate(_blocks(state.p.shape[0]))), threads)
    r = np.concatenate([x[0] for x in parts]) if parts else state.r.copy()
    p = np.concatenate([x[1] for x in parts]) if parts else state.p.copy()
    return LangevinState(r, p, state.time + steps * dt)


@dataclass(frozen=True)
class Moments:
    mean_r: np.ndarray
    mean_p: np.ndarray
    cov_r: np.ndarray
    cov_p: np.ndarray
    cov_rp: np.ndarray


def wigner_moments(state) -> Moments:
    """Unbiased sample moments of a Langevin state or a kick ensemble (as momenta)."""
    if isinstance(state, KickEnsemble):
        p = state.samples
        r = np.zeros_like(p)
    else:
        r, p = state.r, state.p
    n = p.shape[0]
    if n == 0:
        raise DomainError("empty ensemble")
    dim = p.shape[1]
    if n == 1:
        z = np.zeros((dim, dim))
        return Moments(r[0].copy(), p[0].copy(), z, z.copy(), z.copy())
    c = np.cov(np.hstack([r, p]).T, ddof=1)
    return Moments(r.mean(axis=0), p.mean(axis=0), c[:dim, :dim], c[dim:, dim:], c[:dim, dim:])
