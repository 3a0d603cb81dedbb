import math

import numpy as np
import pytest

from surface_qbm import (
    NATURAL,
    SI,
    ConstantPolarizability,
    DomainError,
    DrudeMedium,
    LorentzPolarizability,
    ParticleModel,
    PerfectMirror,
    PhysicalConstants,
    RangeError,
    TabulatedPermittivity,
    TabulatedPolarizability,
    ThermalEnvironment,
    Vacuum,
)
from surface_qbm.physics import (
    occupation,
    occupation_derivative,
    permittivity_at,
    permittivity_imaginary_axis,
    polarizability_at,
    polarizability_imaginary_axis,
    thermal_wavelength,
)

# 4 pi hbar c / (kB 300 K) from tests/oracles.py (mpmath, CODATA 2022)
THERMAL_WAVELENGTH_300K = 9.5918458500262253e-5


def omega_for(u, T, k=SI):
    return u * k.kB * T / k.hbar


class TestConstants:
    def test_si_consistency(self):
        assert abs(SI.mu0 * SI.eps0 * SI.c**2 - 1) < 1e-12

    def test_natural(self):
        assert (NATURAL.hbar, NATURAL.c, NATURAL.kB, NATURAL.eps0, NATURAL.mu0) == (1, 1, 1, 1, 1)

    def test_rejects_inconsistent(self):
        with pytest.raises(ValueError):
            PhysicalConstants(hbar=1, c=1, eps0=1, mu0=2, kB=1)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PhysicalConstants(hbar=0, c=1, eps0=1, mu0=1, kB=1)


class TestOccupation:
    def test_ln2_gives_one(self):
        env = ThermalEnvironment(300.0)
        assert occupation(omega_for(math.log(2), 300.0), env) == pytest.approx(1.0, rel=1e-14)

    def test_unit_argument(self):
        env = ThermalEnvironment(300.0)
        assert occupation(omega_for(1.0, 300.0), env) == pytest.approx(1 / (math.e - 1), rel=1e-14)
        assert occupation(omega_for(1.0, 300.0), env) == pytest.approx(0.5819767, abs=5e-8)

    def test_zero_temperature_exact(self):
        assert occupation(1e15, ThermalEnvironment(0.0)) == 0.0

    def test_nonpositive_omega(self):
        with pytest.raises(DomainError):
            occupation(0.0, ThermalEnvironment(300.0))

    def test_no_overflow_far_tail(self):
        assert occupation(omega_for(1e4, 10.0, SI), ThermalEnvironment(10.0)) == 0.0


class TestOccupationDerivative:
    def test_ln2(self):
        T = 300.0
        beta = SI.hbar / (SI.kB * T)
        got = occupation_derivative(omega_for(math.log(2), T), ThermalEnvironment(T))
        assert got == pytest.approx(-2 * beta, rel=1e-13)

    def test_unit_argument(self):
        T = 300.0
        beta = SI.hbar / (SI.kB * T)
        n = 1 / (math.e - 1)
        got = occupation_derivative(omega_for(1.0, T), ThermalEnvironment(T))
        assert got == pytest.approx(-beta * n * (n + 1), rel=1e-13)

    def test_finite_difference(self):
        T = 300.0
        env = ThermalEnvironment(T)
        for u in (0.3, 1.0, 4.0, 15.0):
            w = omega_for(u, T)
            h = 1e-4 * w
            # fourth-order central difference
            fd = (-occupation(w + 2 * h, env) + 8 * occupation(w + h, env) - 8 * occupation(w - h, env)
                  + occupation(w - 2 * h, env)) / (12 * h)
            assert occupation_derivative(w, env) == pytest.approx(fd, rel=1e-8)

    def test_zero_temperature(self):
        with pytest.raises(DomainError):
            occupation_derivative(1e15, ThermalEnvironment(0.0))


class TestPolarizability:
    def test_static_limit(self):
        m = LorentzPolarizability(2.0, 3.0, 0.5)
        a = polarizability_at(m, 0.0)
        assert a == 2.0 and a.imag == 0.0

    def test_on_resonance(self):
        m = LorentzPolarizability(2.0, 3.0, 0.5)
        assert polarizability_at(m, 3.0) == pytest.approx(1j * 2.0 * 3.0 / 0.5, rel=1e-14)

    def test_constant(self):
        assert polarizability_at(ConstantPolarizability(7.0), [1.0, 1e15]) == pytest.approx([7.0, 7.0])

    def test_crossing_symmetry(self):
        m = LorentzPolarizability(1.0, 3.0, 0.4)
        w = np.linspace(0.1, 10, 17)
        np.testing.assert_allclose(polarizability_at(m, -w), np.conj(polarizability_at(m, w)), rtol=1e-15)

    def test_imaginary_axis_real(self):
        m = LorentzPolarizability(1.0, 3.0, 0.4)
        assert polarizability_imaginary_axis(m, 2.0) == pytest.approx(9.0 / (9 + 4 + 0.8))

    def test_tabulated_interpolates_and_guards_range(self):
        t = TabulatedPolarizability([(1.0, 2.0, 0.1), (2.0, 1.0, 0.2), (3.0, 0.5, 0.1)])
        assert polarizability_at(t, 2.0) == pytest.approx(1.0 + 0.2j)
        with pytest.raises(RangeError):
            polarizability_at(t, 3.5)

    def test_tabulated_passivity(self):
        with pytest.raises(ValueError):
            TabulatedPolarizability([(1.0, 2.0, -0.1), (2.0, 1.0, 0.2)])

    def test_tabulated_order(self):
        with pytest.raises(ValueError):
            TabulatedPolarizability([(2.0, 2.0, 0.1), (1.0, 1.0, 0.2)])

    def test_lorentz_validation(self):
        with pytest.raises(ValueError):
            LorentzPolarizability(-1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            LorentzPolarizability(1.0, 0.0, 0.0)


class TestPermittivity:
    def test_vacuum(self):
        assert permittivity_at(Vacuum(), 1e15) == 1 + 0j

    def test_drude_zero_crossing(self):
        wp = 1e16
        eps = permittivity_at(DrudeMedium(wp, 1e-6 * wp), wp)
        assert abs(eps) < 1e-5

    def test_drude_high_frequency(self):
        wp, g = 1e16, 1e13
        w = 1e3 * wp
        eps = permittivity_at(DrudeMedium(wp, g), w)
        assert eps.real == pytest.approx(1 - wp**2 / w**2, rel=1e-12)

    def test_drude_pole(self):
        with pytest.raises(DomainError):
            permittivity_at(DrudeMedium(1e16, 1e13), 0.0)

    def test_drude_rejects_lossless(self):
        with pytest.raises(ValueError):
            DrudeMedium(1e16, 0.0)

    def test_drude_lossy(self):
        w = np.geomspace(1e10, 1e18, 50)
        assert np.all(permittivity_at(DrudeMedium(1e16, 1e13), w).imag > 0)

    def test_mirror_sentinel(self):
        assert np.isinf(permittivity_at(PerfectMirror(), 1.0).real)

    def test_imaginary_axis(self):
        assert permittivity_imaginary_axis(DrudeMedium(2.0, 1.0), 1.0) == pytest.approx(1 + 4 / 2)

    def test_tabulated_passivity(self):
        with pytest.raises(ValueError):
            TabulatedPermittivity([(1.0, 2.0, -0.1), (2.0, 1.0, 0.2)])


class TestThermalWavelength:
    def test_room_temperature(self):
        assert thermal_wavelength(ThermalEnvironment(300.0)) == pytest.approx(THERMAL_WAVELENGTH_300K, rel=1e-12)
        assert thermal_wavelength(ThermalEnvironment(300.0)) == pytest.approx(9.59e-5, rel=1e-3)

    def test_scaling(self):
        a = thermal_wavelength(ThermalEnvironment(100.0))
        b = thermal_wavelength(ThermalEnvironment(200.0))
        assert a == pytest.approx(2 * b, rel=1e-15)

    def test_natural_units(self):
        assert thermal_wavelength(ThermalEnvironment(1.0), NATURAL) == pytest.approx(4 * np.pi)

    def test_zero_temperature(self):
        with pytest.raises(DomainError):
            thermal_wavelength(ThermalEnvironment(0.0))


class TestModels:
    def test_mass_positive(self):
        with pytest.raises(ValueError):
            ParticleModel(0.0, ConstantPolarizability(1.0))

    def test_temperature_nonnegative(self):
        with pytest.raises(ValueError):
            ThermalEnvironment(-1.0)

    def test_frozen(self):
        env = ThermalEnvironment(1.0)
        with pytest.raises(AttributeError):
            env.temperature = 2.0
