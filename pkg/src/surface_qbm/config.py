"""Run configuration: TOML parsing, validation and canonical re-emission.

The accepted grammar is documented in the README ("Configuration file").
Every problem found is collected before :class:`ConfigError` is raised.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import tomli
import tomli_w

from .coefficients import COEFFICIENT_NAMES, SpectralGrid
from .errors import ConfigError
from .physics import (
    NATURAL,
    SI,
    ConstantPolarizability,
    DrudeMedium,
    LorentzPolarizability,
    ParticleModel,
    PerfectMirror,
    PhysicalConstants,
    TabulatedPermittivity,
    TabulatedPolarizability,
    Vacuum,
)
from .surface import KParQuadrature

SUITES = ("kicks", "master_equation", "equipartition")
RESIDUALS = ("fdr", "diffusion", "drag")
RESIDUAL_NEEDS = {"fdr": ("lambda", "gamma"), "diffusion": ("lambda", "d"), "drag": ("d", "xi")}
SUITE_NEEDS = {"kicks": ("d",), "master_equation": ("lambda",), "equipartition": ("gamma", "d")}
DEFAULT_COEFFICIENTS = ("lambda", "gamma", "d", "xi")


class ConfigParseError(ConfigError):
    """Malformed TOML; ``line`` and ``column`` locate the problem (1-based)."""

    def __init__(self, message, line=None, column=None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__([f"parse error at {where}{message}"])


@dataclass(frozen=True)
class Sweep:
    """A strictly increasing list of values.

    ``kind`` is ``"value"``, ``"list"`` or ``"log"``; ``start``/``stop``/``num``
    are kept for log ranges so the canonical form round-trips.
    """

    kind: str
    values: Tuple[float, ...]
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = None

    def to_toml(self):
        if self.kind == "value":
            return self.values[0]
        if self.kind == "list":
            return list(self.values)
        return {"start": self.start, "stop": self.stop, "num": self.num, "spacing": "log"}


@dataclass(frozen=True)
class Outputs:
    coefficients: Tuple[str, ...] = DEFAULT_COEFFICIENTS
    residuals: Tuple[str, ...] = RESIDUALS
    kernel_tau: Tuple[float, ...] = ()
    suites: Tuple[Tuple[str, bool], ...] = tuple((s, True) for s in SUITES)

    def suite_enabled(self, name):
        return dict(self.suites).get(name, False)


@dataclass(frozen=True)
class Thresholds:
    fdr: float = 1e-10
    diffusion: float = 1e-10
    drag: float = 1e-12


@dataclass(frozen=True)
class ScenarioConfig:
    constants: PhysicalConstants
    particle: ParticleModel
    medium: object
    z: Sweep
    temperature: Sweep
    spectral: SpectralGrid = SpectralGrid()
    kpar: KParQuadrature = KParQuadrature()
    outputs: Outputs = Outputs()
    thresholds: Thresholds = Thresholds()
    cp2_cutoff: Optional[float] = None
    seed: int = 0
    source: str = field(default="", compare=False)

    def grid(self):
        """``(z, T)`` pairs in sweep order (z outer, T inner)."""
        return [(z, t) for z in self.z.values for t in self.temperature.values]


# -- helpers ------------------------------------------------------------------------

class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def table(self, doc, key, path, required=False):
        val = doc.get(key)
        if val is None:
            if required:
                self.add(path, "missing required section")
            return {}
        if not isinstance(val, dict):
            self.add(path, "must be a table")
            return {}
        return val

    def unknown(self, tbl, allowed, path):
        for key in tbl:
            if key not in allowed:
                self.add(f"{path}.{key}" if path else key, "unknown key")

    def number(self, tbl, key, path, default=None, required=False, positive=False, nonneg=False):
        full = f"{path}.{key}"
        if key not in tbl:
            if required:
                self.add(full, "missing required value")
            return default
        val = tbl[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.add(full, "must be a number")
            return default
        val = float(val)
        if not math.isfinite(val):
            self.add(full, "must be finite")
            return default
        if positive and not val > 0:
            self.add(full, "must be positive")
            return default
        if nonneg and val < 0:
            self.add(full, "must be non-negative")
            return default
        return val

    def integer(self, tbl, key, path, default, minimum=None):
        full = f"{path}.{key}"
        if key not in tbl:
            return default
        val = tbl[key]
        if isinstance(val, bool) or not isinstance(val, int):
            self.add(full, "must be an integer")
            return default
        if minimum is not None and val < minimum:
            self.add(full, f"must be >= {minimum}")
            return default
        return val

    def build(self, path, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            self.add(path, str(exc))
            return None


def _sweep(col, tbl, key, path, positive, nonneg=False):
    full = f"{path}.{key}"
    if key not in tbl:
        col.add(full, "missing required value")
        return None
    raw = tbl[key]

    def check(values):
        arr = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(arr)):
            col.add(full, "values must be finite")
            return False
        if positive and np.any(arr <= 0):
            col.add(full, "values must be positive")
            return False
        if nonneg and np.any(arr < 0):
            col.add(full, "values must be non-negative")
            return False
        return True

    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return Sweep("value", (float(raw),)) if check([raw]) else None
    if isinstance(raw, list):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
            col.add(full, "list entries must be numbers")
            return None
        if len(raw) < 2:
            col.add(full, "a sweep needs at least 2 points")
            return None
        if not check(raw):
            return None
        if np.any(np.diff(raw) <= 0):
            col.add(full, "sweep values must be strictly increasing")
            return None
        return Sweep("list", tuple(float(v) for v in raw))
    if isinstance(raw, dict):
        col.unknown(raw, ("start", "stop", "num", "spacing"), full)
        if raw.get("spacing", "log") != "log":
            col.add(f"{full}.spacing", "only 'log' ranges are supported")
        start = col.number(raw, "start", full, required=True, positive=True)
        stop = col.number(raw, "stop", full, required=True, positive=True)
        num = col.integer(raw, "num", full, None)
        if num is None:
            col.add(f"{full}.num", "missing required integer")
            return None
        if num < 2:
            col.add(f"{full}.num", "a sweep needs at least 2 points")
            return None
        if start is None or stop is None:
            return None
        if not stop > start:
            col.add(full, "stop must exceed start")
            return None
        vals = np.geomspace(start, stop, num)
        vals[0], vals[-1] = start, stop
        return Sweep("log", tuple(float(v) for v in vals), start, stop, num)
    col.add(full, "must be a number, a list, or a {start, stop, num} table")
    return None


def _samples(col, tbl, path):
    raw = tbl.get("samples")
    if not isinstance(raw, list) or not all(isinstance(r, list) and len(r) == 3 for r in raw):
        col.add(f"{path}.samples", "must be a list of [omega, re, im] rows")
        return None
    return tuple(tuple(float(v) for v in r) for r in raw)


# -- sections -----------------------------------------------------------------------

def _constants(col, doc):
    tbl = col.table(doc, "constants", "constants")
    col.unknown(tbl, ("system", "hbar", "c", "eps0", "mu0", "kB"), "constants")
    system = tbl.get("system", "si")
    base = {"si": SI, "natural": NATURAL}.get(system)
    if base is None:
        col.add("constants.system", "must be 'si' or 'natural'")
        return SI
    over = {k: col.number(tbl, k, "constants", positive=True) for k in ("hbar", "c", "eps0", "mu0", "kB") if k in tbl}
    if not over:
        return base
    if any(v is None for v in over.values()):
        return base
    vals = {k: getattr(base, k) for k in ("hbar", "c", "eps0", "mu0", "kB")}
    vals.update(over)
    return col.build("constants", PhysicalConstants, name="custom", **vals) or base


def _particle(col, doc):
    tbl = col.table(doc, "particle", "particle", required=True)
    col.unknown(tbl, ("mass", "polarizability"), "particle")
    mass = col.number(tbl, "mass", "particle", required=True, positive=True)
    pol_tbl = col.table(tbl, "polarizability", "particle.polarizability", required=bool(tbl))
    path = "particle.polarizability"
    model = pol_tbl.get("model")
    pol = None
    if model == "lorentz":
        col.unknown(pol_tbl, ("model", "alpha0", "omega0", "gamma"), path)
        a0 = col.number(pol_tbl, "alpha0", path, required=True, nonneg=True)
        w0 = col.number(pol_tbl, "omega0", path, required=True, positive=True)
        g = col.number(pol_tbl, "gamma", path, required=True, positive=True)
        if None not in (a0, w0, g):
            pol = col.build(path, LorentzPolarizability, a0, w0, g)
    elif model == "constant":
        col.unknown(pol_tbl, ("model", "alpha0"), path)
        a0 = col.number(pol_tbl, "alpha0", path, required=True, nonneg=True)
        if a0 is not None:
            pol = ConstantPolarizability(a0)
    elif model == "tabulated":
        col.unknown(pol_tbl, ("model", "samples"), path)
        s = _samples(col, pol_tbl, path)
        if s is not None:
            pol = col.build(path, TabulatedPolarizability, s)
    elif pol_tbl:
        col.add(f"{path}.model", "must be 'lorentz', 'constant' or 'tabulated'")
    if mass is None or pol is None:
        return None
    return ParticleModel(mass, pol)


def _medium(col, doc):
    tbl = col.table(doc, "medium", "medium", required=True)
    model = tbl.get("model")
    if model == "drude":
        col.unknown(tbl, ("model", "omega_p", "gamma_d"), "medium")
        wp = col.number(tbl, "omega_p", "medium", required=True, positive=True)
        gd = col.number(tbl, "gamma_d", "medium", required=True, positive=True)
        return DrudeMedium(wp, gd) if None not in (wp, gd) else None
    if model == "mirror":
        col.unknown(tbl, ("model",), "medium")
        return PerfectMirror()
    if model == "vacuum":
        col.unknown(tbl, ("model",), "medium")
        return Vacuum()
    if model == "tabulated":
        col.unknown(tbl, ("model", "samples"), "medium")
        s = _samples(col, tbl, "medium")
        return col.build("medium", TabulatedPermittivity, s) if s is not None else None
    if tbl:
        col.add("medium.model", "must be 'drude', 'mirror', 'vacuum' or 'tabulated'")
    return None


def _quadrature(col, doc):
    tbl = col.table(doc, "quadrature", "quadrature")
    col.unknown(tbl, ("spectral", "kpar"), "quadrature")
    sp = col.table(tbl, "spectral", "quadrature.spectral")
    path = "quadrature.spectral"
    col.unknown(sp, ("u_max", "panels", "target_rel_tol", "order"), path)
    d = SpectralGrid()
    spectral = col.build(
        path,
        SpectralGrid,
        col.number(sp, "u_max", path, d.u_max, positive=True),
        col.integer(sp, "panels", path, d.panels, 1),
        col.number(sp, "target_rel_tol", path, d.target_rel_tol, positive=True),
        col.integer(sp, "order", path, d.order, 4),
    ) or d
    kp = col.table(tbl, "kpar", "quadrature.kpar")
    path = "quadrature.kpar"
    col.unknown(kp, ("propagating_nodes", "evanescent_nodes", "evanescent_cutoff", "target_rel_tol", "max_doublings"), path)
    k = KParQuadrature()
    kpar = col.build(
        path,
        KParQuadrature,
        col.integer(kp, "propagating_nodes", path, k.propagating_nodes, 1),
        col.integer(kp, "evanescent_nodes", path, k.evanescent_nodes, 1),
        col.number(kp, "evanescent_cutoff", path, k.evanescent_cutoff, positive=True),
        col.number(kp, "target_rel_tol", path, k.target_rel_tol, positive=True),
        col.integer(kp, "max_doublings", path, k.max_doublings, 0),
    ) or k
    return spectral, kpar


def _string_list(col, tbl, key, path, allowed, default):
    if key not in tbl:
        return default
    raw = tbl[key]
    if not isinstance(raw, list) or not all(isinstance(v, str) for v in raw):
        col.add(f"{path}.{key}", "must be a list of strings")
        return default
    bad = [v for v in raw if v not in allowed]
    for v in bad:
        col.add(f"{path}.{key}", f"unknown entry {v!r}; choose from {', '.join(allowed)}")
    if len(set(raw)) != len(raw):
        col.add(f"{path}.{key}", "duplicate entries")
    # canonical order follows ``allowed``
    return tuple(a for a in allowed if a in raw)


def _outputs(col, doc):
    tbl = col.table(doc, "outputs", "outputs")
    col.unknown(tbl, ("coefficients", "residuals", "kernel_tau", "suites"), "outputs")
    coeffs = _string_list(col, tbl, "coefficients", "outputs", COEFFICIENT_NAMES, DEFAULT_COEFFICIENTS)
    residuals = _string_list(col, tbl, "residuals", "outputs", RESIDUALS, RESIDUALS)
    for r in residuals:
        missing = [c for c in RESIDUAL_NEEDS[r] if c not in coeffs]
        if missing:
            col.add("outputs.residuals", f"{r!r} needs coefficients {missing} in outputs.coefficients")
    taus = ()
    if "kernel_tau" in tbl:
        raw = tbl["kernel_tau"]
        if not isinstance(raw, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
            col.add("outputs.kernel_tau", "must be a list of numbers")
        elif not all(math.isfinite(v) for v in raw) or (len(raw) > 1 and np.any(np.diff(raw) <= 0)):
            col.add("outputs.kernel_tau", "must be finite and strictly increasing")
        else:
            taus = tuple(float(v) for v in raw)
    st = col.table(tbl, "suites", "outputs.suites")
    col.unknown(st, SUITES, "outputs.suites")
    suites = []
    for s in SUITES:
        val = st.get(s, True)
        if not isinstance(val, bool):
            col.add(f"outputs.suites.{s}", "must be true or false")
            val = True
        suites.append((s, val))
    return Outputs(coeffs, residuals, taus, tuple(suites))


def _thresholds(col, doc):
    tbl = col.table(doc, "thresholds", "thresholds")
    col.unknown(tbl, RESIDUALS, "thresholds")
    d = Thresholds()
    return Thresholds(*(col.number(tbl, r, "thresholds", getattr(d, r), positive=True) for r in RESIDUALS))


def config_from_dict(doc, source="") -> ScenarioConfig:
    """Validate a parsed document; raises :class:`ConfigError` listing every problem."""
    col = _Collector()
    col.unknown(doc, ("seed", "cp2_cutoff", "constants", "particle", "medium", "geometry", "environment",
                      "quadrature", "outputs", "thresholds"), "")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        col.add("seed", "must be an integer in [0, 2**64)")
        seed = 0
    cp2 = col.number(doc, "cp2_cutoff", "root", positive=True) if "cp2_cutoff" in doc else None
    constants = _constants(col, doc)
    particle = _particle(col, doc)
    medium = _medium(col, doc)
    geo = col.table(doc, "geometry", "geometry", required=True)
    col.unknown(geo, ("z",), "geometry")
    z = _sweep(col, geo, "z", "geometry", positive=True) if geo else None
    env = col.table(doc, "environment", "environment", required=True)
    col.unknown(env, ("T",), "environment")
    temp = _sweep(col, env, "T", "environment", positive=False, nonneg=True) if env else None
    spectral, kpar = _quadrature(col, doc)
    outputs = _outputs(col, doc)
    thresholds = _thresholds(col, doc)
    if col.errors:
        raise ConfigError(col.errors)
    return ScenarioConfig(constants, particle, medium, z, temp, spectral, kpar, outputs, thresholds, cp2, seed, source)


_LOC = re.compile(r"\(at line (\d+), column (\d+)\)")


def parse_config(text: str, source="") -> ScenarioConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        msg = str(exc)
        m = _LOC.search(msg)
        line, colno = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ConfigParseError(_LOC.sub("", msg).strip(), line, colno) from None
    return config_from_dict(doc, source)


def load_config(path) -> ScenarioConfig:
    """Read and validate a TOML configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config(text, str(path))


# -- canonical form -----------------------------------------------------------------

def _medium_dict(m):
    if isinstance(m, DrudeMedium):
        return {"model": "drude", "omega_p": m.omega_p, "gamma_d": m.gamma_d}
    if isinstance(m, PerfectMirror):
        return {"model": "mirror"}
    if isinstance(m, Vacuum):
        return {"model": "vacuum"}
    return {"model": "tabulated", "samples": [list(r) for r in m.samples]}


def _pol_dict(p):
    if isinstance(p, LorentzPolarizability):
        return {"model": "lorentz", "alpha0": p.alpha0, "omega0": p.omega0, "gamma": p.gamma}
    if isinstance(p, ConstantPolarizability):
        return {"model": "constant", "alpha0": p.alpha0}
    return {"model": "tabulated", "samples": [list(r) for r in p.samples]}


def to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical document: every default made explicit."""
    k = cfg.constants
    if k.name in ("si", "natural"):
        constants = {"system": k.name}
    else:
        constants = {"system": "si", "hbar": k.hbar, "c": k.c, "eps0": k.eps0, "mu0": k.mu0, "kB": k.kB}
    doc = {"seed": cfg.seed}
    if cfg.cp2_cutoff is not None:
        doc["cp2_cutoff"] = cfg.cp2_cutoff
    doc.update(
        {
            "constants": constants,
            "particle": {"mass": cfg.particle.mass, "polarizability": _pol_dict(cfg.particle.polarizability)},
            "medium": _medium_dict(cfg.medium),
            "geometry": {"z": cfg.z.to_toml()},
            "environment": {"T": cfg.temperature.to_toml()},
            "quadrature": {
                "spectral": {
                    "u_max": cfg.spectral.u_max,
                    "panels": cfg.spectral.panels,
                    "target_rel_tol": cfg.spectral.target_rel_tol,
                    "order": cfg.spectral.order,
                },
                "kpar": {
                    "propagating_nodes": cfg.kpar.propagating_nodes,
                    "evanescent_nodes": cfg.kpar.evanescent_nodes,
                    "evanescent_cutoff": cfg.kpar.evanescent_cutoff,
                    "target_rel_tol": cfg.kpar.target_rel_tol,
                    "max_doublings": cfg.kpar.max_doublings,
                },
            },
            "outputs": {
                "coefficients": list(cfg.outputs.coefficients),
                "residuals": list(cfg.outputs.residuals),
                "kernel_tau": list(cfg.outputs.kernel_tau),
                "suites": dict(cfg.outputs.suites),
            },
            "thresholds": {r: getattr(cfg.thresholds, r) for r in RESIDUALS},
        }
    )
    return doc


def dump_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))
