"""Run configuration: a line-based ``section.key = value`` format.

Lines starting with ``#`` and blank lines are ignored; unknown keys and
malformed values are rejected with the offending line number.  Every key has a
default, so an empty file is a complete configuration.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .anisotropy import PRESETS, laplacian_proxy, preset_director
from .errors import ConfigError
from .grid import Grid
from .state import Constants

GATE_BOUND = 1.0 / 32.0
IC_PRESETS = ("uniform", "gaussian_blob_pair", "separated_slabs")
WAVEFORMS = ("constant", "sinusoid")
PROFILES = ("uniform", "left_right_antisymmetric")


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _one_of(options):
    def check(x):
        return x in options
    check.options = options
    return check


# key: (type, default, check, description)
SCHEMA = {
    "grid.nx": (int, 32, lambda n: n >= 4, "cells along x"),
    "grid.ny": (int, 32, lambda n: n >= 4, "cells along y"),
    "grid.lx": (float, 1.0, _positive, "domain width"),
    "grid.ly": (float, 1.0, _positive, "domain height"),
    "time.T": (float, 0.1, _positive, "final time"),
    "time.dt": (float, 1e-3, _positive, "time step"),
    "ns.Re": (float, 1.0, _positive, "Reynolds number"),
    "ns.alpha": (float, 1.0, _positive, "Coulomb coupling"),
    "ns.cfl": (float, 0.9, lambda c: 0 < c <= 1, "momentum CFL number"),
    "np.Pe": (float, 1.0, _positive, "Peclet number"),
    "np.beta": (float, 1.0, _positive, "drift strength"),
    "np.dt_safety": (float, 0.9, lambda c: 0 < c <= 1, "advective CFL number for the ions"),
    "poisson.gamma": (float, 1.0, _positive, "charge-to-potential coupling"),
    "poisson.tol": (float, 1e-10, _positive, "relative residual tolerance"),
    "poisson.maxit": (int, 0, _nonneg, "iteration cap (0 means 10 times the cell count)"),
    "poisson.precond": (str, "none", _one_of(("none", "jacobi")), "CG preconditioner"),
    "poisson.solver": (str, "cg", _one_of(("cg", "direct")), "linear solver"),
    "director.preset": (str, "zero", _one_of(PRESETS), "director field"),
    "director.lambda": (float, 0.5, _positive, "mobility anisotropy"),
    "director.epsilon": (float, 0.5, _positive, "permittivity anisotropy"),
    "bc.tau": (float, 1.0, _positive, "Robin coefficient"),
    "bc.xi.waveform": (str, "constant", _one_of(WAVEFORMS), "time dependence of the boundary datum"),
    "bc.xi.amplitude": (float, 1.0, math.isfinite, "boundary datum amplitude"),
    "bc.xi.frequency": (float, 1.0, _nonneg, "sinusoid frequency (cycles per unit time)"),
    "bc.xi.profile": (str, "left_right_antisymmetric", _one_of(PROFILES), "spatial shape of the datum"),
    "ic.charges": (str, "gaussian_blob_pair", _one_of(IC_PRESETS), "initial concentrations"),
    "ic.background": (float, 1.0, _nonneg, "uniform background concentration"),
    "ic.amplitude": (float, 1.0, _nonneg, "bump height"),
    "ic.width": (float, 0.1, _positive, "Gaussian width"),
    "reg.kappa": (float, 0.0, _nonneg, "resolvent regularization"),
    "reg.c_gate": (float, 1.0, _positive, "constant in the regularization gate"),
    "picard.tol": (float, 1e-8, _positive, "relative max-norm increment tolerance"),
    "picard.maxit": (int, 50, lambda n: n >= 1, "Picard iteration cap"),
    "picard.halvings": (int, 4, _nonneg, "dt halvings allowed after a failed step"),
    "out.ledger": (str, "", None, "energy ledger CSV path"),
    "out.vtk_dir": (str, "", None, "directory for VTK snapshots"),
    "out.vtk_every": (int, 0, _nonneg, "snapshot cadence in steps (0 disables)"),
    "out.summary": (str, "", None, "JSON run summary path"),
    "out.dump": (str, "", None, "where the last good state goes after a failure"),
}


def _convert(key, text, line=None):
    typ, _, check, _ = SCHEMA[key]
    try:
        if typ is int:
            val = int(text)
        elif typ is float:
            val = float(text)
            if not math.isfinite(val):
                raise ValueError
        else:
            val = text
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {typ.__name__}", line) from None
    if check is not None and not check(val):
        opts = getattr(check, "options", None)
        msg = f"must be one of {', '.join(opts)}" if opts else "violates its constraint"
        raise ConfigError(f"{key} = {text}: {msg}", line)
    return val


@dataclass
class SimConfig:
    values: dict = field(default_factory=lambda: {k: v[1] for k, v in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **changes):
        """Copy with changes; keyword names use ``__`` for dots (``time__dt=1e-3``)."""
        vals = dict(self.values)
        for k, v in changes.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key}")
            vals[key] = _convert(key, v if isinstance(v, str) else serialize_value(v))
        cfg = SimConfig(vals)
        cfg.validate()
        return cfg

    @property
    def grid(self):
        v = self.values
        return Grid(v["grid.nx"], v["grid.ny"], v["grid.lx"], v["grid.ly"])

    @property
    def constants(self):
        v = self.values
        return Constants(Re=v["ns.Re"], Pe=v["np.Pe"], alpha=v["ns.alpha"], beta=v["np.beta"],
                         gamma=v["poisson.gamma"], tau=v["bc.tau"], kappa=v["reg.kappa"])

    @property
    def steps(self):
        return int(round(self["time.T"] / self["time.dt"]))

    def director(self, grid=None):
        return preset_director(self["director.preset"], grid or self.grid,
                               self["director.lambda"], self["director.epsilon"])

    def validate(self):
        for key, val in self.values.items():
            _convert(key, serialize_value(val))
        if self["reg.kappa"] > 0:
            check_gate(self["reg.kappa"], laplacian_proxy(self.director()), self["reg.c_gate"])
        return self


def gate_value(kappa, proxy, c_gate=1.0):
    return kappa * c_gate * (1.0 + proxy**2)


def check_gate(kappa, proxy, c_gate=1.0):
    """Admit κ only if κ·C·(1 + proxy²) ≤ 1/32."""
    val = gate_value(kappa, proxy, c_gate)
    if val > GATE_BOUND * (1 + 1e-12):
        raise ConfigError(f"reg.kappa = {kappa!r} refused: kappa*C_gate*(1+proxy^2) = {val:.6g} exceeds 1/32 "
                          f"(proxy {proxy:.6g}, C_gate {c_gate:g})")
    return val


def serialize_value(v):
    return repr(v) if isinstance(v, float) else str(v)


def parse_text(text):
    vals = {k: v[1] for k, v in SCHEMA.items()}
    seen = set()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", n)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", n)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", n)
        seen.add(key)
        vals[key] = _convert(key, value, n)
    cfg = SimConfig(vals)
    cfg.validate()
    return cfg


def parse_config(path):
    with open(path) as fh:
        return parse_text(fh.read())


def serialize(cfg):
    return "".join(f"{k} = {serialize_value(cfg.values[k])}\n" for k in SCHEMA)


def describe():
    """Documentation of every key with its default."""
    return "\n".join(f"{k} = {serialize_value(v[1])}    # {v[3]}" for k, v in SCHEMA.items())


def xi_profile(cfg, grid):
    x, _ = grid.boundary_face_centers()
    if cfg["bc.xi.profile"] == "uniform":
        return np.ones(grid.n_boundary)
    return np.cos(np.pi * x / grid.lx)


def xi_waveform(cfg, t):
    if cfg["bc.xi.waveform"] == "constant":
        return 1.0
    return math.sin(2 * math.pi * cfg["bc.xi.frequency"] * t)


def boundary_datum(cfg, grid, t, profile=None):
    """ξ on the boundary faces at time t: amplitude · waveform(t) · profile(face midpoint)."""
    prof = xi_profile(cfg, grid) if profile is None else profile
    return cfg["bc.xi.amplitude"] * xi_waveform(cfg, t) * prof


def initial_charges(cfg, grid):
    X, Y = grid.cell_centers()
    c0, a = cfg["ic.background"], cfg["ic.amplitude"]
    kind = cfg["ic.charges"]
    if kind == "uniform":
        return np.full(grid.shape, c0), np.full(grid.shape, c0)
    if kind == "gaussian_blob_pair":
        w2 = cfg["ic.width"] ** 2

        def blob(px, py):
            return np.exp(-((X - px * grid.lx) ** 2 + (Y - py * grid.ly) ** 2) / w2)
        return c0 + a * blob(0.3, 0.5), c0 + a * blob(0.7, 0.5)
    left = X < 0.5 * grid.lx
    return c0 + a * left, c0 + a * ~left
