import math
import os
import subprocess
import sys

import numpy as np
import pytest

from surface_qbm import ConfigError, DomainError, kernels
from surface_qbm.coefficients import CoefficientSet, Split
from surface_qbm.phase_space import (
    BLOCK,
    KickEnsemble,
    LangevinState,
    bootstrap_std,
    decoherence_factor,
    evolve_density_matrix,
    evolve_langevin,
    gaussian_state,
    sample_kicks,
    stream,
    symmetric_sqrt,
    wigner_moments,
)


def coeffs(lam=0.0, gamma=0.0):
    z = np.zeros((2, 2))
    return CoefficientSet(lambda_ij=Split(z, lam * np.eye(2)), gamma_ij=Split(z, gamma * np.eye(2)))


def position_variance(grid):
    p = np.diag(grid.values).real * grid.dx
    x = grid.x_nodes
    m = np.sum(p * x)
    return float(np.sum(p * (x - m) ** 2))


def momentum_variance(grid, hbar=1.0):
    psi_k = np.fft.fft(np.fft.ifft(grid.values, axis=1), axis=0)
    pk = np.diag(psi_k).real
    pk = pk / pk.sum()
    k = 2 * np.pi * np.fft.fftfreq(grid.x_nodes.size, d=grid.dx)
    return float(np.sum(pk * (hbar * k) ** 2) - np.sum(pk * hbar * k) ** 2)


class TestDensityMatrix:
    def test_gaussian_normalised(self):
        g = gaussian_state(1e-8)
        assert g.trace() == pytest.approx(1.0, rel=1e-14)
        assert g.x_nodes.size == 256
        assert g.half_width == pytest.approx(5e-8, rel=0.01)

    def test_identity_without_terms(self):
        g = gaussian_state(1.0, hbar=1.0)
        out = evolve_density_matrix(g, coeffs(), 1.0, 0.1, 50, terms=set(), hbar=1.0)
        assert np.array_equal(out.values, g.values)
        assert out.time == pytest.approx(5.0)

    def test_identity_with_zero_rate(self):
        g = gaussian_state(1.0, hbar=1.0)
        out = evolve_density_matrix(g, coeffs(0.0), 1.0, 0.1, 50, hbar=1.0)
        assert np.array_equal(out.values, g.values)

    def test_free_spreading(self):
        # sigma(t)^2 = sigma0^2 + (hbar t / 2 M sigma0)^2
        sigma, mass, hbar = 1.0, 1.0, 1.0
        g = gaussian_state(sigma, n=256, half_width=20.0, hbar=hbar)
        dt, steps = 0.01, 200
        out = evolve_density_matrix(g, coeffs(), mass, dt, steps, terms={"kinetic"}, hbar=hbar)
        t = dt * steps
        expected = sigma**2 + (hbar * t / (2 * mass * sigma)) ** 2
        assert position_variance(out) == pytest.approx(expected, rel=5e-3)
        assert out.hermiticity_error() < 1e-12 * np.max(np.abs(out.values))

    def test_decoherence_decay_rate(self):
        lam = 1e14
        g = gaussian_state(1e-8)
        dt = 0.05 / (lam * g.half_width**2)
        out = evolve_density_matrix(g, coeffs(lam), 1e-17, dt, 200)
        mid = 128
        for off in (8, 32, 64):
            a = g.x_nodes[mid + off] - g.x_nodes[mid]
            rate = -math.log(abs(out.values[mid, mid + off] / g.values[mid, mid + off])) / out.time
            assert rate == pytest.approx(lam * a**2, rel=1e-3)

    def test_trace_hermiticity_positivity_with_kinetic(self):
        g = gaussian_state(1.0, n=128, half_width=12.0, hbar=1.0)
        lam = 0.05
        dt = 0.01
        cur = g
        scale = np.max(np.abs(g.values))
        for _ in range(10):
            cur = evolve_density_matrix(cur, coeffs(lam), 1.0, dt, 100, terms={"decoherence", "kinetic"}, hbar=1.0)
            assert cur.hermiticity_error() < 1e-12 * scale
            d = np.diag(cur.values)
            assert np.max(np.abs(d.imag)) < 1e-12 * scale
            assert np.min(d.real) >= -1e-12 * scale
        assert abs(cur.trace() - 1.0) < 1e-9

    def test_friction_narrows_momentum_and_keeps_trace(self):
        g = gaussian_state(1.0, n=128, half_width=10.0, hbar=1.0)
        out = evolve_density_matrix(g, coeffs(gamma=0.5), 1.0, 0.01, 50, terms={"friction"}, hbar=1.0)
        assert out.trace() == pytest.approx(g.trace(), rel=1e-12)
        assert out.hermiticity_error() < 1e-12
        assert momentum_variance(out) < momentum_variance(g)

    def test_stability_bounds_collected(self):
        g = gaussian_state(1.0, n=256, half_width=5.0, hbar=1.0)
        with pytest.raises(ConfigError) as info:
            evolve_density_matrix(g, coeffs(lam=1.0, gamma=10.0), 1.0, 1.0, 1,
                                  terms={"decoherence", "kinetic", "friction"}, hbar=1.0)
        assert len(info.value.errors) == 3

    def test_unknown_term(self):
        with pytest.raises(ConfigError):
            evolve_density_matrix(gaussian_state(1.0), coeffs(), 1.0, 0.1, 1, terms={"magic"})


D_ISO = 3e-40 * np.eye(2)


class TestKicks:
    def test_zero_diffusion(self):
        ens = sample_kicks(np.zeros((2, 2)), 1.0, 2000, seed=1)
        assert np.all(ens.samples == 0)

    def test_deterministic(self):
        a = sample_kicks(D_ISO, 1.0, 5000, seed=3).samples
        b = sample_kicks(D_ISO, 1.0, 5000, seed=3).samples
        c = sample_kicks(D_ISO, 1.0, 5000, seed=4).samples
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    def test_covariance_and_mean(self):
        n, dt = 100_000, 2.0
        ens = sample_kicks(D_ISO, dt, n, seed=11)
        m = wigner_moments(ens)
        target = D_ISO * dt
        se = target[0, 0] * math.sqrt(2.0 / n)
        assert np.all(np.abs(np.diag(m.cov_p) - np.diag(target)) <= 5 * se)
        # off-diagonal scale is sqrt(Dxx Dyy) dt
        assert abs(m.cov_p[0, 1]) <= 5 * se
        assert np.all(np.abs(m.mean_p) <= 5 * math.sqrt(target[0, 0] / n))

    def test_anisotropic_target(self):
        d = np.array([[2.0, 0.6], [0.6, 1.0]]) * 1e-40
        ens = sample_kicks(d, 1.0, 100_000, seed=5)
        se = np.sqrt((np.outer(np.diag(d), np.diag(d)) + d**2) / 100_000)
        assert np.all(np.abs(wigner_moments(ens).cov_p - d) <= 5 * se)

    def test_rejects_non_psd(self):
        with pytest.raises(DomainError):
            sample_kicks(np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0, 1000, seed=0)

    def test_rejects_small_ensemble(self):
        with pytest.raises(DomainError):
            sample_kicks(D_ISO, 1.0, 999, seed=0)

    def test_factor_at_zero_separation(self):
        ens = sample_kicks(D_ISO, 1.0, 1000, seed=0)
        assert decoherence_factor(ens, [0.0, 0.0]) == 1.0

    def test_factor_empty(self):
        ens = KickEnsemble(np.zeros((0, 2)), 1.0, D_ISO, 0)
        with pytest.raises(DomainError):
            decoherence_factor(ens, [1.0, 0.0])

    def test_factor_unit_exponent(self):
        hbar = 1.0545718176461565e-34
        dxx = D_ISO[0, 0]
        a = math.sqrt(2 * hbar**2 / dxx)
        ens = sample_kicks(D_ISO, 1.0, 100_000, seed=21)
        f = decoherence_factor(ens, [a, 0.0], hbar)
        s = bootstrap_std(ens, [a, 0.0], hbar)
        assert 0 < s < 0.01
        assert abs(f - math.exp(-1)) <= 3 * s

    def test_thread_partition_bit_identical(self):
        n = 3 * BLOCK + 17
        a = sample_kicks(D_ISO, 1.0, n, seed=9, threads=1).samples
        b = sample_kicks(D_ISO, 1.0, n, seed=9, threads=3).samples
        assert np.array_equal(a, b)


class TestSymmetricSqrt:
    def test_square(self):
        m = np.array([[2.0, 0.5], [0.5, 1.0]])
        r = symmetric_sqrt(m)
        np.testing.assert_allclose(r @ r, m, rtol=1e-14)
        np.testing.assert_allclose(r, r.T)

    def test_semidefinite_ok(self):
        r = symmetric_sqrt(np.array([[1.0, 1.0], [1.0, 1.0]]))
        np.testing.assert_allclose(r @ r, [[1, 1], [1, 1]], atol=1e-15)


def langevin_start(n, p0=1.0):
    rng = stream(123, "test-init")
    return LangevinState(np.zeros((n, 2)), p0 * rng.standard_normal((n, 2)))


class TestLangevin:
    def test_pure_drag_decay(self):
        gamma = 0.5 * np.eye(2)
        st = langevin_start(100_000)
        dt, steps = 1e-3, 1000
        out = evolve_langevin(st, gamma, np.zeros((2, 2)), 1.0, dt, steps, seed=1)
        t = dt * steps
        ratio = np.mean(out.p**2, axis=0) / np.mean(st.p**2, axis=0)
        np.testing.assert_allclose(ratio, math.exp(-4 * 0.5 * t), rtol=0.02)

    def test_ballistic(self):
        st = langevin_start(1000)
        mass, dt, steps = 2.0, 0.01, 300
        out = evolve_langevin(st, np.zeros((2, 2)), np.zeros((2, 2)), mass, dt, steps, seed=1)
        assert np.array_equal(out.p, st.p)
        np.testing.assert_allclose(out.r, st.r + st.p * dt * steps / mass, rtol=1e-12, atol=1e-15)
        assert out.time == pytest.approx(dt * steps)

    def test_stability_rejected(self):
        with pytest.raises(ConfigError):
            evolve_langevin(langevin_start(10), np.eye(2), np.eye(2), 1.0, 0.1, 1, seed=0)

    def test_weak_convergence_under_dt_halving(self):
        # stationary <p^2> = D / 4 Gamma; the two runs differ by Monte-Carlo noise only
        g, d, n = 0.5, 2.0, 20_000
        gamma, dmat = g * np.eye(2), d * np.eye(2)
        target = d / (4 * g)
        res = []
        for dt in (0.005, 0.0025):
            steps = int(round(10 / (2 * g * dt)))
            out = evolve_langevin(LangevinState(np.zeros((n, 2)), np.zeros((n, 2))), gamma, dmat, 1.0, dt,
                                  steps, seed=77)
            res.append(np.mean(out.p**2, axis=0))
        stat = target * math.sqrt(2.0 / n)
        assert np.all(np.abs(res[0] - res[1]) <= 2 * math.sqrt(2) * stat)
        assert np.all(np.abs(res[1] - target) <= 3 * stat)

    def test_thread_partition_bit_identical(self):
        n = 2 * BLOCK + 5
        st = langevin_start(n)
        args = (0.2 * np.eye(2), 0.3 * np.eye(2), 1.0, 0.01, 300)
        a = evolve_langevin(st, *args, seed=5, threads=1)
        b = evolve_langevin(st, *args, seed=5, threads=4)
        assert np.array_equal(a.p, b.p) and np.array_equal(a.r, b.r)

    def test_state_shape_check(self):
        with pytest.raises(ValueError):
            LangevinState(np.zeros((3, 2)), np.zeros((3, 3)))


class TestMoments:
    def test_symmetric_ensemble_zero_means(self):
        p = np.array([[1.0, 2.0], [3.0, -1.0]])
        st = LangevinState(np.vstack([p, -p]), np.vstack([-p, p]))
        m = wigner_moments(st)
        assert np.all(m.mean_r == 0) and np.all(m.mean_p == 0)

    def test_single_particle(self):
        st = LangevinState(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
        m = wigner_moments(st)
        assert np.all(m.cov_r == 0) and np.all(m.cov_p == 0) and np.all(m.cov_rp == 0)
        np.testing.assert_array_equal(m.mean_p, [3.0, 4.0])

    def test_empty(self):
        with pytest.raises(DomainError):
            wigner_moments(LangevinState(np.zeros((0, 2)), np.zeros((0, 2))))

    def test_unbiased(self):
        st = LangevinState(np.array([[0.0, 0.0], [2.0, 0.0]]), np.array([[1.0, 0.0], [3.0, 0.0]]))
        m = wigner_moments(st)
        assert m.cov_r[0, 0] == pytest.approx(2.0)
        assert m.cov_rp[0, 0] == pytest.approx(2.0)


class TestCrossCheck:
    def test_master_equation_matches_kicks(self):
        # matched D = 2 hbar^2 Lambda: both routes give exponent Lambda a^2 t
        hbar, lam, sigma = 1.0545718176461565e-34, 1e14, 1e-8
        g = gaussian_state(sigma, hbar=hbar)
        dt = 0.05 / (lam * g.half_width**2)
        steps = 200
        out = evolve_density_matrix(g, coeffs(lam), 1e-17, dt, steps, hbar=hbar)
        mid, off = 128, 32
        a = g.x_nodes[mid + off] - g.x_nodes[mid]
        me_exp = -math.log(abs(out.values[mid, mid + off] / g.values[mid, mid + off]))
        d = 2 * hbar**2 * lam * np.eye(2)
        ens = sample_kicks(d, out.time, 100_000, seed=8)
        f = decoherence_factor(ens, [a, 0.0], hbar)
        sigma_exp = bootstrap_std(ens, [a, 0.0], hbar) / f
        assert abs(-math.log(f) - me_exp) <= 3 * sigma_exp


class TestBackends:
    def test_langevin_kernels_agree(self):
        rng = np.random.default_rng(0)
        r, p = rng.standard_normal((500, 2)), rng.standard_normal((500, 2))
        noise = rng.standard_normal((40, 500, 2))
        drift = np.array([[0.02, 0.001], [0.0, 0.03]])
        chol = np.array([[0.1, 0.0], [0.02, 0.1]])
        a = kernels.langevin_numba(r.copy(), p.copy(), noise, drift, chol, 0.5, 0.01)
        b = kernels.langevin_numpy(r.copy(), p.copy(), noise, drift, chol, 0.5, 0.01)
        np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(a[1], b[1], rtol=1e-12, atol=1e-14)

    def test_friction_kernels_agree(self):
        g = gaussian_state(1.0, n=64, hbar=1.0)
        a = kernels.friction_numba(g.values.copy(), g.x_nodes, 0.3, 0.01, g.dx)
        b = kernels.friction_numpy(g.values.copy(), g.x_nodes, 0.3, 0.01, g.dx)
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-16)

    def test_kpar_kernels_agree(self):
        rng = np.random.default_rng(1)
        n, nseg = 2000, 16
        args = (rng.uniform(0, 2, n) + 1j * rng.uniform(0, 0.1, n), rng.uniform(0, 1e-3, n) + 0j,
                np.full(n, 4.0 + 0j), np.full(n, -30 + 2j), False, np.sort(rng.integers(0, nseg, n)), nseg)
        a = kernels.kpar_sums_numba(*args)
        b = kernels.kpar_sums_numpy(*args)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12 * np.max(np.abs(y)))

    def test_numpy_backend_end_to_end(self):
        code = (
            "import sys, numpy as np; sys.path.insert(0, 'tests');"
            "import surface_qbm as s; from conftest import scenario;"
            "from surface_qbm.phase_space import LangevinState, evolve_langevin;"
            "lam = s.lambda_coefficient(scenario()).total[0, 0];"
            "st = LangevinState(np.zeros((100, 2)), np.ones((100, 2)));"
            "out = evolve_langevin(st, 0.1 * np.eye(2), 0.2 * np.eye(2), 1.0, 0.01, 50, seed=3);"
            "print(s.BACKEND, repr(float(lam)), repr(float(out.p.sum())))"
        )
        root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        res = {}
        for backend in ("numba", "numpy"):
            env = dict(os.environ, SURFACE_QBM_BACKEND=backend)
            out = subprocess.run([sys.executable, "-c", code], cwd=root, env=env, capture_output=True,
                                 text=True, check=True)
            name, lam, psum = out.stdout.split()
            assert name == backend
            res[backend] = (float(lam), float(psum))
        assert res["numpy"][0] == pytest.approx(res["numba"][0], rel=1e-12)
        assert res["numpy"][1] == pytest.approx(res["numba"][1], rel=1e-12)
