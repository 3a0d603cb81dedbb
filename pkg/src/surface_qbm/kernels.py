"""Hot loops with a compiled (numba) and a vectorised (numpy) implementation.

The active implementation is chosen once at import time from
``SURFACE_QBM_BACKEND``; both are importable for benchmarking and testing.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

# Output columns of the in-plane wavenumber sums, all at zero lateral
# separation.  ``G`` is the scattering tensor, ``D[i, j]`` its lateral
# double derivative block, ``D1`` the first lateral derivative.
KPAR_COLUMNS = (
    "g_xx",      # = g_yy
    "g_zz",
    "d_xx_xx",   # D[x, x] element xx (= D[y, y] element yy)
    "d_xx_yy",   # D[x, x] element yy (= D[y, y] element xx)
    "d_xx_zz",   # D[x, x] element zz (= D[y, y] element zz)
    "d_xy_xy",   # D[x, y] elements xy and yx
    "d1_x_xz",   # first derivative along x, element xz (zx is its negative)
)
NCOL = len(KPAR_COLUMNS)


# -- in-plane wavenumber sums ---------------------------------------------------

@njit(cache=True)
def _root_upper(z):
    s = np.sqrt(z)
    if s.imag < 0.0 or (s.imag == 0.0 and s.real < 0.0):
        s = -s
    return s


@njit(cache=True, nogil=True)
def kpar_sums_numba(kz, w, k0sq, eps, mirror, seg, nseg):
    out = np.zeros((nseg, NCOL), dtype=np.complex128)
    l1 = np.zeros((nseg, NCOL), dtype=np.complex128)
    f = np.empty(NCOL, dtype=np.complex128)
    for n in range(kz.size):
        q = kz[n]
        q2 = q * q
        k2 = k0sq[n]
        if mirror:
            rs = -1.0 + 0j
            rp = 1.0 + 0j
        else:
            e = eps[n]
            q_in = _root_upper((e - 1.0) * k2 + q2)
            rs = (q - q_in) / (q + q_in)
            rp = (e * q - q_in) / (e * q + q_in)
        kp2 = k2 - q2
        a = q2 / k2
        b = kp2 / k2
        f[0] = rs - a * rp
        f[1] = 2.0 * b * rp
        f[2] = kp2 * (0.25 * rs - 0.75 * a * rp)
        f[3] = kp2 * (0.75 * rs - 0.25 * a * rp)
        f[4] = kp2 * b * rp
        f[5] = kp2 * (-0.25 * rs - 0.25 * a * rp)
        f[6] = -1j * q * b * rp
        s = seg[n]
        wn = w[n]
        for c in range(NCOL):
            t = wn * f[c]
            out[s, c] += t
            l1[s, c] += abs(t.real) + 1j * abs(t.imag)
    return out, l1


def _root_upper_np(z):
    s = np.sqrt(np.asarray(z, dtype=complex))
    flip = (s.imag < 0) | ((s.imag == 0) & (s.real < 0))
    return np.where(flip, -s, s)


def reflection_np(kz, k0sq, eps):
    """Half-space Fresnel coefficients from the vacuum-side normal wavenumber."""
    q_in = _root_upper_np((eps - 1.0) * k0sq + kz * kz)
    rs = (kz - q_in) / (kz + q_in)
    rp = (eps * kz - q_in) / (eps * kz + q_in)
    return rs, rp


def kpar_sums_numpy(kz, w, k0sq, eps, mirror, seg, nseg):
    if mirror:
        rs = np.full(kz.shape, -1.0 + 0j)
        rp = np.full(kz.shape, 1.0 + 0j)
    else:
        rs, rp = reflection_np(kz, k0sq, eps)
    q2 = kz * kz
    kp2 = k0sq - q2
    a = q2 / k0sq
    b = kp2 / k0sq
    f = np.stack(
        [
            rs - a * rp,
            2.0 * b * rp,
            kp2 * (0.25 * rs - 0.75 * a * rp),
            kp2 * (0.75 * rs - 0.25 * a * rp),
            kp2 * b * rp,
            kp2 * (-0.25 * rs - 0.25 * a * rp),
            -1j * kz * b * rp,
        ],
        axis=1,
    )
    t = w[:, None] * f
    out = np.zeros((nseg, NCOL), dtype=complex)
    l1 = np.zeros((nseg, NCOL), dtype=complex)
    np.add.at(out, seg, t)
    np.add.at(l1, seg, np.abs(t.real) + 1j * np.abs(t.imag))
    return out, l1


# -- Langevin step ----------------------------------------------------------------

@njit(cache=True, nogil=True)
def langevin_numba(r, p, noise, drift, chol, inv_mass, dt):
    n, dim = p.shape
    steps = noise.shape[0]
    for s in range(steps):
        for i in range(n):
            for a in range(dim):
                kick = 0.0
                for b in range(dim):
                    kick += chol[a, b] * noise[s, i, b]
                acc = 0.0
                for b in range(dim):
                    acc += drift[a, b] * p[i, b]
                p[i, a] += -acc * dt + kick
            for a in range(dim):
                r[i, a] += p[i, a] * inv_mass * dt
    return r, p


def langevin_numpy(r, p, noise, drift, chol, inv_mass, dt):
    for s in range(noise.shape[0]):
        p += -(p @ drift.T) * dt + noise[s] @ chol.T
        r += p * inv_mass * dt
    return r, p


# -- friction stencil -------------------------------------------------------------

@njit(cache=True, nogil=True)
def friction_numba(rho, x, gamma, dt, dx):
    """One explicit upwind step of ``d rho = -gamma (x - x') (d_x - d_x') rho dt``."""
    n = x.size
    out = rho.copy()
    c = gamma * dt / dx
    for i in range(n):
        for j in range(n):
            v = c * (x[i] - x[j])
            # advection along x with velocity v, along x' with velocity -v
            if v > 0.0:
                dxi = rho[i, j] - rho[i - 1, j] if i > 0 else rho[i, j]
                dxj = rho[i, j + 1] - rho[i, j] if j < n - 1 else -rho[i, j]
            else:
                dxi = rho[i + 1, j] - rho[i, j] if i < n - 1 else -rho[i, j]
                dxj = rho[i, j] - rho[i, j - 1] if j > 0 else rho[i, j]
            out[i, j] = rho[i, j] - v * (dxi - dxj)
    return out


def friction_numpy(rho, x, gamma, dt, dx):
    v = (gamma * dt / dx) * (x[:, None] - x[None, :])
    z_row = np.zeros((1, rho.shape[1]), dtype=rho.dtype)
    z_col = np.zeros((rho.shape[0], 1), dtype=rho.dtype)
    back_i = rho - np.vstack([z_row, rho[:-1]])
    fwd_i = np.vstack([rho[1:], z_row]) - rho
    back_j = rho - np.hstack([z_col, rho[:, :-1]])
    fwd_j = np.hstack([rho[:, 1:], z_col]) - rho
    pos = v > 0
    dxi = np.where(pos, back_i, fwd_i)
    dxj = np.where(pos, fwd_j, back_j)
    return rho - v * (dxi - dxj)


if USE_NUMBA:
    kpar_sums = kpar_sums_numba
    langevin_steps = langevin_numba
    friction_step = friction_numba
else:
    kpar_sums = kpar_sums_numpy
    langevin_steps = langevin_numpy
    friction_step = friction_numpy
