"""Command-line front end: ``surface-qbm {sweep, verify, show-config}``.

Exit codes: 0 all checks pass, 1 an identity or verification check failed,
2 configuration error, 3 numerical failure at one or more sweep points.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import phase_space as ps
from .coefficients import CoefficientSet, KernelTable, Scenario, Split, compute_coefficients
from .config import ScenarioConfig, dump_config, load_config
from .errors import ConfigError, DomainError, QuadratureError
from .physics import ThermalEnvironment

EXIT_OK, EXIT_PHYSICS, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "SURFACE_QBM_THREADS"

# (attribute on CoefficientSet, component labels, unit)
_TENSOR = ("xx", "xy", "yy")
_LAYOUT = {
    "lambda": ("lambda_ij", _TENSOR, "1/(m^2 s)"),
    "gamma": ("gamma_ij", _TENSOR, "1/s"),
    "d": ("d_ij", _TENSOR, "kg^2 m^2/s^3"),
    "xi": ("xi_ij", _TENSOR, "kg/s"),
    "u1": ("u1", ("",), "J"),
    "c1": ("c1_i", ("x", "y"), "N"),
    "u2": ("u2", ("",), "J"),
    "c2": ("c2_ij", _TENSOR, "N/m"),
}
_INDEX = {"xx": (0, 0), "xy": (0, 1), "yy": (1, 1), "x": (0,), "y": (1,), "": ()}


def csv_columns(cfg: ScenarioConfig) -> List[Tuple[str, str]]:
    """``(name, unit)`` pairs; a pure function of the outputs section."""
    cols = [("z", "m"), ("T", "K")]
    for name in cfg.outputs.coefficients:
        _, comps, unit = _LAYOUT[name]
        for comp in comps:
            base = f"{name}_{comp}" if comp else name
            cols += [(f"{base}_{part}", unit) for part in ("free", "surface", "total")]
    for k, _ in enumerate(cfg.outputs.kernel_tau):
        cols += [(f"noise_xx_tau{k}", "kg^2 m^2/s^4"), (f"dissipation_xx_tau{k}", "kg^2 m^2/s^4")]
    cols += [(f"{r}_residual", "1") for r in cfg.outputs.residuals]
    return cols


def scenario_for(cfg: ScenarioConfig, z, T) -> Scenario:
    return Scenario(cfg.particle, cfg.medium, z, ThermalEnvironment(T), cfg.constants,
                    cfg.spectral, cfg.kpar, cfg.cp2_cutoff)


def _rel(a, b):
    """Largest entrywise mismatch relative to the largest diagonal of ``b``."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = float(np.max(np.abs(np.diag(b))))
    if scale == 0.0:
        return 0.0 if not np.any(a - b) else math.inf
    return float(np.max(np.abs(a - b)) / scale)


def identity_residuals(cfg: ScenarioConfig, cs: CoefficientSet, T) -> dict:
    k = cfg.constants
    out = {}
    lam = cs.lambda_ij.total if cs.lambda_ij is not None else None
    if "fdr" in cfg.outputs.residuals:
        out["fdr"] = _rel(2 * cfg.particle.mass * k.kB * T * cs.gamma_ij.total, k.hbar**2 * lam)
    if "diffusion" in cfg.outputs.residuals:
        out["diffusion"] = _rel(2 * k.hbar**2 * lam, cs.d_ij.total)
    if "drag" in cfg.outputs.residuals:
        out["drag"] = 0.0 if T == 0 else _rel(cs.d_ij.total / (2 * k.kB * T), cs.xi_ij.total)
    return out


@dataclass
class PointResult:
    index: int
    z: float
    T: float
    values: Optional[List[float]] = None
    residuals: dict = field(default_factory=dict)
    error: Optional[str] = None


def _point(cfg: ScenarioConfig, index, z, T) -> PointResult:
    res = PointResult(index, z, T)
    try:
        sc = scenario_for(cfg, z, T)
        want = cfg.outputs.coefficients
        cs = compute_coefficients(sc, want)
        row = [z, T]
        for name in want:
            attr, comps, _ = _LAYOUT[name]
            split = getattr(cs, attr)
            for comp in comps:
                idx = _INDEX[comp]
                row += [float(np.asarray(split.free)[idx]), float(np.asarray(split.surface)[idx]),
                        float(np.asarray(split.total)[idx])]
        if cfg.outputs.kernel_tau:
            table = KernelTable(sc)
            for tau in cfg.outputs.kernel_tau:
                row += [float(table.noise(tau)[0][0, 0]), float(table.dissipation(tau)[0][0, 0])]
        res.residuals = identity_residuals(cfg, cs, T)
        row += [res.residuals[r] for r in cfg.outputs.residuals]
        if not all(math.isfinite(v) for v in row):
            raise FloatingPointError("non-finite value in row")
        res.values = row
    except (QuadratureError, DomainError, FloatingPointError, ValueError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


@dataclass
class SweepResult:
    columns: List[Tuple[str, str]]
    points: List[PointResult]
    thresholds: dict
    exit_code: int = 0

    @property
    def residual_max(self):
        out = {}
        for p in self.points:
            for k, v in p.residuals.items():
                out[k] = max(out.get(k, 0.0), v)
        return out

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + ",".join(u for _, u in self.columns) + "\n")
        buf.write(",".join(n for n, _ in self.columns) + "\n")
        for p in self.points:
            if p.values is not None:
                buf.write(",".join(repr(float(v)) for v in p.values) + "\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "points": len(self.points),
            "completed": sum(p.values is not None for p in self.points),
            "failures": [{"index": p.index, "z": p.z, "T": p.T, "error": p.error}
                         for p in self.points if p.error is not None],
            "residual_max": self.residual_max,
            "thresholds": self.thresholds,
            "exit_code": self.exit_code,
        }


def resolve_threads(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError([f"{THREADS_ENV} must be an integer, got {env!r}"]) from None
    return 1


def run_sweep(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Evaluate every ``(z, T)`` point; rows come back in sweep order."""
    grid = cfg.grid()
    jobs = [(i, z, t) for i, (z, t) in enumerate(grid)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(lambda j: _point(cfg, *j), jobs))
    else:
        points = [_point(cfg, *j) for j in jobs]
    thresholds = {r: getattr(cfg.thresholds, r) for r in cfg.outputs.residuals}
    result = SweepResult(csv_columns(cfg), points, thresholds)
    if any(p.error for p in points):
        result.exit_code = EXIT_NUMERICAL
    elif any(v > thresholds[k] for k, v in result.residual_max.items()):
        result.exit_code = EXIT_PHYSICS
    return result


# -- verification suites ----------------------------------------------------------

@dataclass
class Check:
    name: str
    status: str  # "pass", "fail" or "skipped"
    measured: Optional[float] = None
    expected: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


@dataclass
class VerificationReport:
    z: float
    T: float
    checks: List[Check]

    @property
    def exit_code(self):
        return EXIT_PHYSICS if any(c.status == "fail" for c in self.checks) else EXIT_OK

    def text(self) -> str:
        lines = [f"verification at z = {self.z!r} m, T = {self.T!r} K"]
        for c in self.checks:
            if c.status == "skipped":
                lines.append(f"{c.name:32s} skipped  {c.detail}")
            else:
                lines.append(f"{c.name:32s} {c.status:8s} measured={c.measured!r} expected={c.expected!r} "
                             f"tol={c.tolerance!r} {c.detail}".rstrip())
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {"z": self.z, "T": self.T, "exit_code": self.exit_code,
                "checks": [c.__dict__ for c in self.checks]}


def _check(name, measured, expected, tol, relative=True, detail=""):
    err = abs(measured - expected) / abs(expected) if relative else abs(measured - expected)
    return Check(name, "pass" if err <= tol else "fail", float(measured), float(expected), float(tol), detail)


def kick_checks(d, hbar, seed, n=100_000, threads=1) -> List[Check]:
    """Kick-ensemble decoherence factor at unit exponent and its quadratic scaling."""
    dxx = float(d[0, 0])
    dt = 1.0
    a1 = math.sqrt(2 * hbar**2 / (dxx * dt))  # exponent D_xx a^2 dt / 2 hbar^2 = 1
    ens = ps.sample_kicks(d, dt, n, seed, threads)
    a = np.array([a1, 0.0])
    f = ps.decoherence_factor(ens, a, hbar)
    sigma = ps.bootstrap_std(ens, a, hbar, seed=seed)
    out = [_check("kicks.factor_at_unit_exponent", f, math.exp(-1.0), 3 * sigma, relative=False,
                  detail="tolerance is 3 bootstrap sigma")]
    scales = np.array([0.25, 0.5, 0.75, 1.0])
    a2 = scales * a1**2
    logs = np.array([-math.log(ps.decoherence_factor(ens, [math.sqrt(s), 0.0], hbar)) for s in a2])
    slope = float(np.dot(a2, logs) / np.dot(a2, a2))
    out.append(_check("kicks.log_factor_slope", slope, dxx * dt / (2 * hbar**2), 0.02))
    return out


def master_equation_checks(lam, hbar, mass, n=256, sigma=1e-8) -> List[Check]:
    """Off-diagonal decay of a Gaussian state under decoherence-only evolution."""
    lam_xx = float(lam[0, 0])
    grid = ps.gaussian_state(sigma, n=n, hbar=hbar)
    L = grid.half_width
    dt = 0.05 / (lam_xx * L**2)
    steps = 200
    lam = np.asarray(lam, float)
    cs = CoefficientSet(lambda_ij=Split(np.zeros_like(lam), lam))
    out = ps.evolve_density_matrix(grid, cs, mass, dt, steps, terms={"decoherence"}, hbar=hbar)
    mid = n // 2
    checks = []
    for k, off in enumerate((8, 32, 64)):
        sep = grid.x_nodes[mid + off] - grid.x_nodes[mid]
        rate = -math.log(abs(out.values[mid, mid + off] / grid.values[mid, mid + off])) / out.time
        checks.append(_check(f"master_equation.decay_rate_{k}", rate, lam_xx * sep**2, 1e-3))
    return checks


def equipartition_checks(gamma, d, mass, kT, seed, n=100_000, threads=1) -> List[Check]:
    """Stationary momentum variance of a Langevin ensemble after 10 relaxation times."""
    g = float(np.max(np.linalg.eigvalsh(0.5 * (gamma + gamma.T))))
    dt = 0.0025 / g
    steps = int(round(10 / (2 * g * dt)))
    st = ps.LangevinState(np.zeros((n, 2)), np.zeros((n, 2)))
    out = ps.evolve_langevin(st, gamma, d, mass, dt, steps, seed, threads)
    p2 = np.mean(out.p**2, axis=0)
    return [_check(f"equipartition.p2_{ax}", p2[i], mass * kT, 0.015) for i, ax in enumerate("xy")]


def run_verification(cfg: ScenarioConfig, threads: int = 1) -> VerificationReport:
    """Run the enabled dynamical suites at the first sweep point."""
    z, T = cfg.z.values[0], cfg.temperature.values[0]
    sc = scenario_for(cfg, z, T)
    k = cfg.constants
    enabled = [s for s, on in cfg.outputs.suites if on]
    checks: List[Check] = []
    cs = None
    if enabled and T > 0:
        cs = compute_coefficients(sc, ("lambda", "gamma", "d"))
    for suite, on in cfg.outputs.suites:
        if not on:
            checks.append(Check(suite, "skipped", detail="disabled in configuration"))
            continue
        if cs is None:
            checks.append(Check(suite, "skipped", detail="all rates vanish at T = 0"))
            continue
        seed = cfg.seed
        if suite == "kicks":
            checks += kick_checks(cs.d_ij.total, k.hbar, seed, threads=threads)
        elif suite == "master_equation":
            checks += master_equation_checks(cs.lambda_ij.total, k.hbar, cfg.particle.mass)
        elif suite == "equipartition":
            checks += equipartition_checks(cs.gamma_ij.total, cs.d_ij.total, cfg.particle.mass,
                                           k.kB * T, seed, threads=threads)
    return VerificationReport(z, T, checks)


# -- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surface-qbm", description="Surface-modified open-system coefficients.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("sweep", "tabulate coefficients over the (z, T) grid"),
                        ("verify", "run the dynamical verification suites"),
                        ("show-config", "print the validated, normalised configuration")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="PATH", help="output file (CSV for sweep, JSON for verify)")
        p.add_argument("--threads", type=int, metavar="N", help=f"worker threads (default: ${THREADS_ENV} or 1)")
        p.add_argument("--seed", type=int, metavar="U64", help="override the configured seed")
    return parser


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError(["--seed must be in [0, 2**64)"])
            cfg = ScenarioConfig(**{**cfg.__dict__, "seed": args.seed})
        threads = resolve_threads(args.threads)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "show-config":
        text = dump_config(cfg)
        _write(args.out, text) if args.out else sys.stdout.write(text)
        return EXIT_OK

    if args.command == "sweep":
        result = run_sweep(cfg, threads)
        if args.out:
            _write(args.out, result.csv())
            root, _ = os.path.splitext(args.out)
            _write(root + ".json", json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
        else:
            sys.stdout.write(result.csv())
        for f in result.summary()["failures"]:
            print(f"point {f['index']} (z={f['z']!r}, T={f['T']!r}) failed: {f['error']}", file=sys.stderr)
        return result.exit_code

    try:
        report = run_verification(cfg, threads)
    except (QuadratureError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    sys.stdout.write(report.text())
    if args.out:
        _write(args.out, json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    return report.exit_code


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
