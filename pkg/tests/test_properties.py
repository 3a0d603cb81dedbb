"""Property-based checks of the model invariants."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from surface_qbm import NATURAL, SI, DrudeMedium, LorentzPolarizability, ThermalEnvironment
from surface_qbm.coefficients import Split
from surface_qbm.config import dump_config, parse_config
from surface_qbm.green import free_green
from surface_qbm.phase_space import KickEnsemble, LangevinState, decoherence_factor, symmetric_sqrt, wigner_moments
from surface_qbm.physics import occupation, occupation_derivative, permittivity_at, polarizability_at
from surface_qbm.surface import fresnel

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

temps = st.floats(1.0, 5000.0)
us = st.floats(1e-3, 200.0)
pos = st.floats(-5.0, 5.0)


@SETTINGS
@given(T=temps, u1=us, u2=us)
def test_occupation_monotone(T, u1, u2):
    env = ThermalEnvironment(T)
    scale = SI.kB * T / SI.hbar
    lo, hi = sorted((u1, u2))
    n_lo, n_hi = occupation(lo * scale, env), occupation(hi * scale, env)
    assert n_lo >= n_hi >= 0.0


@SETTINGS
@given(T=temps, u=st.floats(1e-3, 60.0))
def test_occupation_derivative_identity(T, u):
    env = ThermalEnvironment(T)
    w = u * SI.kB * T / SI.hbar
    n = occupation(w, env)
    beta = SI.hbar / (SI.kB * T)
    assert abs(occupation_derivative(w, env) + beta * n * (n + 1)) <= 1e-12 * beta * n * (n + 1)


@SETTINGS
@given(a0=st.floats(1e-3, 1e3), w0=st.floats(0.1, 10.0), g=st.floats(1e-3, 5.0), w=st.floats(0.0, 50.0))
def test_crossing_symmetry(a0, w0, g, w):
    m = LorentzPolarizability(a0, w0, g)
    assert polarizability_at(m, -w) == np.conj(polarizability_at(m, w))


@SETTINGS
@given(wp=st.floats(1e13, 1e17), gd=st.floats(1e10, 1e15), w=st.floats(1e10, 1e18))
def test_drude_lossy(wp, gd, w):
    assert permittivity_at(DrudeMedium(wp, gd), w).imag > 0


@SETTINGS
@given(r1=st.tuples(pos, pos, pos), r2=st.tuples(pos, pos, pos), k=st.floats(0.05, 20.0))
def test_free_green_reciprocity(r1, r2, k):
    sep = np.subtract(r1, r2)
    if np.linalg.norm(sep) < 1e-3:
        return
    a = free_green(r1, r2, k, NATURAL).values
    b = free_green(r2, r1, k, NATURAL).values
    assert np.max(np.abs(a - b.T)) <= 1e-12 * np.max(np.abs(a))


@SETTINGS
@given(wp=st.floats(1e14, 1e17), gd=st.floats(1e11, 1e15), w=st.floats(1e12, 1e17), f=st.floats(0.0, 0.999))
def test_fresnel_passive(wp, gd, w, f):
    r = fresnel(w, f * w / SI.c, DrudeMedium(wp, gd))
    assert abs(r.r_s) <= 1 + 1e-12 and abs(r.r_p) <= 1 + 1e-12


@SETTINGS
@given(m=arrays(np.float64, (2, 3), elements=st.floats(-10, 10)))
def test_symmetric_sqrt(m):
    psd = m @ m.T
    r = symmetric_sqrt(psd)
    assert np.allclose(r, r.T)
    assert np.allclose(r @ r, psd, rtol=1e-9, atol=1e-9 * max(1.0, np.max(np.abs(psd))))
    assert np.all(np.linalg.eigvalsh(r) >= -1e-9 * max(1.0, np.max(np.abs(r))))


@SETTINGS
@given(f=arrays(np.float64, (2, 2), elements=st.floats(-1e3, 1e3)),
       s=arrays(np.float64, (2, 2), elements=st.floats(-1e3, 1e3)))
def test_split_total(f, s):
    assert np.array_equal(Split(f, s).total, f + s)


@SETTINGS
@given(p=arrays(np.float64, (50, 2), elements=st.floats(-1e3, 1e3)), a=st.tuples(pos, pos))
def test_decoherence_factor_bounded(p, a):
    ens = KickEnsemble(p, 1.0, np.eye(2), 0)
    f = decoherence_factor(ens, a, hbar=1.0)
    assert 0.0 <= f <= 1.0 + 1e-12


@SETTINGS
@given(p=arrays(np.float64, (20, 2), elements=st.floats(-1e3, 1e3)),
       shift=st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)))
def test_moments_shift_covariant(p, shift):
    r = np.zeros_like(p)
    a = wigner_moments(LangevinState(r, p))
    b = wigner_moments(LangevinState(r, p + np.array(shift)))
    assert np.allclose(b.mean_p, a.mean_p + shift, atol=1e-9)
    assert np.allclose(b.cov_p, a.cov_p, rtol=1e-6, atol=1e-6)


positive = st.floats(1e-9, 1e9, allow_nan=False, allow_infinity=False)


@st.composite
def config_texts(draw):
    medium = draw(st.sampled_from(["mirror", "vacuum", "drude"]))
    lines = [f"seed = {draw(st.integers(0, 2**64 - 1))}", "[particle]", f"mass = {draw(positive)!r}",
             "[particle.polarizability]"]
    if draw(st.booleans()):
        lines += ['model = "lorentz"', f"alpha0 = {draw(positive)!r}", f"omega0 = {draw(positive)!r}",
                  f"gamma = {draw(positive)!r}"]
    else:
        lines += ['model = "constant"', f"alpha0 = {draw(positive)!r}"]
    lines += ["[medium]", f'model = "{medium}"']
    if medium == "drude":
        lines += [f"omega_p = {draw(positive)!r}", f"gamma_d = {draw(positive)!r}"]
    zs = sorted(set(draw(st.lists(positive, min_size=2, max_size=4))))
    if len(zs) < 2:
        zs = [zs[0], zs[0] * 2]
    lines += ["[geometry]", f"z = {zs!r}"]
    if draw(st.booleans()):
        lo = draw(st.floats(1.0, 100.0))
        lines += ["[environment]", f"T = {{ start = {lo!r}, stop = {lo * 10!r}, num = {draw(st.integers(2, 6))} }}"]
    else:
        lines += ["[environment]", f"T = {draw(st.floats(0.0, 1e4))!r}"]
    lines += ["[outputs.suites]", f"kicks = {str(draw(st.booleans())).lower()}"]
    return "\n".join(lines) + "\n"


@SETTINGS
@given(text=config_texts())
def test_config_round_trip(text):
    cfg = parse_config(text)
    canon = dump_config(cfg)
    again = parse_config(canon)
    assert again == cfg
    assert dump_config(again) == canon
