"""The coupled time loop, the κ → 0 sweep and the run driver."""

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .config import boundary_datum, check_gate, initial_charges, xi_profile
from .anisotropy import laplacian_proxy
from .energy import (EnergyLedger, audit_regularized_energy, boundary_work, grad_sqrt_c, gronwall_envelope,
                     hessian_psi)
from .errors import ConfigError, InvariantViolation, PicardError, StepRejected
from .grid import divergence_mac, domain_integral
from .navier_stokes import FlowState, ns_step
from .nernst_planck import ChargePair, FactorCache, advect_pair, cfl_limit, negative_excursions, np_step
from .output import diagnostics_path, dump_state, write_rows, write_summary, write_vtk
from .poisson import PoissonSolver, assemble_anisotropic_robin
from .state import SimulationState

# gross failures abort the run; small excursions are only ledgered
MASS_ABORT = 1e-9
NEGATIVE_ABORT = -1e-8
DIAGNOSTIC_COLUMNS = ("t", "dt", "picard_iterations", "picard_factor", "e_reg", "grad_sqrt_c", "hessian_psi",
                      "xi_w12_sq", "xi_w11_inf", "div_max")


@dataclass
class StepInfo:
    dt: float
    iterations: int
    increments: list = field(default_factory=list)

    @property
    def factors(self):
        inc = self.increments
        return [b / a for a, b in zip(inc[:-1], inc[1:]) if a > 0]

    @property
    def max_factor(self):
        f = self.factors
        return float(max(f)) if f else 0.0


def _rel_increment(new, old):
    out = 0.0
    for a, b in zip(new, old):
        scale = max(np.abs(a).max(), 1e-300)
        out = max(out, np.abs(a - b).max() / scale)
    return out


class Simulation:
    """Everything that stays fixed during a run: grid, director, operators, boundary profile."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.grid = cfg.grid
        self.constants = cfg.constants
        self.director = cfg.director(self.grid)
        if self.constants.kappa > 0:
            check_gate(self.constants.kappa, laplacian_proxy(self.director), cfg["reg.c_gate"])
        self.poisson = assemble_anisotropic_robin(self.grid, self.director.permittivity(), self.constants.tau)
        maxit = cfg["poisson.maxit"] or None
        self.solver = PoissonSolver(self.poisson, cfg["poisson.solver"], cfg["poisson.tol"], maxit,
                                    cfg["poisson.precond"])
        self.mobility = self.director.mobility()
        self.profile = xi_profile(cfg, self.grid)
        self.factors = FactorCache()

    def xi(self, t):
        return boundary_datum(self.cfg, self.grid, t, self.profile)

    def potential(self, pair, xi, psi_guess=None):
        """(φ, ψ) with φ = S_κ(c⁺ − c⁻) and ψ from the Robin–Poisson problem driven by φ and ξ."""
        k = self.constants
        phi = self.solver.resolvent(pair.charge, k.kappa)
        psi = self.solver.potential(phi, xi, k.gamma, psi_guess)
        return phi, psi

    def initial_state(self):
        cp, cm = initial_charges(self.cfg, self.grid)
        pair = ChargePair(cp, cm)
        xi = self.xi(0.0)
        phi, psi = self.potential(pair, xi)
        flow = FlowState.at_rest(self.grid, self.constants.Re, self.constants.alpha)
        state = SimulationState(0.0, flow, pair, psi, phi, xi, self.director, self.poisson, self.constants)
        state.__dict__["_mobility"] = self.mobility
        return state

    def picard_step(self, state, dt):
        """One step without fallback; raises PicardError if the fixed point is not reached."""
        k = self.constants
        cfg = self.cfg
        t_new = state.t + dt
        xi_new = self.xi(t_new)
        v = state.flow.v
        current = _predict(state, dt)
        psi = state.psi
        info = StepInfo(dt, 0)
        limit = cfl_limit(self.grid, v, cfg["np.dt_safety"])
        if dt > limit:
            raise StepRejected(f"advective CFL violated: dt={dt:g} > {limit:g}", max_dt=limit)
        advected = advect_pair(state.charges, v, dt)
        for it in range(1, cfg["picard.maxit"] + 1):
            phi, psi = self.potential(current, xi_new, psi)
            new = np_step(state.charges, v, psi, self.mobility, dt, k.Pe, k.beta, cfg["np.dt_safety"],
                          cache=self.factors, guess=current, advected=advected)
            inc = float(_rel_increment((new.c_plus, new.c_minus), (current.c_plus, current.c_minus)))
            info.increments.append(inc)
            info.iterations = it
            current = new
            if inc <= cfg["picard.tol"]:
                break
        else:
            raise PicardError(f"Picard iteration did not converge in {cfg['picard.maxit']} iterations "
                              f"(last increment {inc:.3e})", residual=inc, iterations=cfg["picard.maxit"],
                              factor=info.max_factor)
        phi, psi = self.potential(current, xi_new, psi)
        flow = ns_step(state.flow, current.c_plus, current.c_minus, psi, dt, cfg["ns.cfl"])
        new_state = SimulationState(t_new, flow, current, psi, phi, xi_new, self.director, self.poisson, k,
                                    history=(dt, state.charges))
        new_state.__dict__["_mobility"] = self.mobility
        return new_state, info

    def advance(self, state, dt, halvings=None):
        """Step by dt, halving on Picard or CFL failure; returns the list of (state, info) sub-steps."""
        halvings = self.cfg["picard.halvings"] if halvings is None else halvings
        try:
            return [self.picard_step(state, dt)]
        except (PicardError, StepRejected):
            if halvings <= 0:
                raise
        first = self.advance(state, 0.5 * dt, halvings - 1)
        return first + self.advance(first[-1][0], 0.5 * dt, halvings - 1)


def _predict(state, dt):
    """Linear extrapolation of the charges from the last two levels (first Picard iterate)."""
    if state.history is None:
        return state.charges
    dt_prev, prev = state.history
    r = dt / dt_prev
    c = state.charges
    return ChargePair(c.c_plus + r * (c.c_plus - prev.c_plus), c.c_minus + r * (c.c_minus - prev.c_minus))


def coupled_step(state, config, dt=None, sim=None):
    """Advance ``state`` by one configured time step (with the dt-halving fallback)."""
    sim = sim or Simulation(config)
    subs = sim.advance(state, config["time.dt"] if dt is None else dt)
    return subs[-1][0]


@dataclass
class RunResult:
    state: SimulationState
    ledger: EnergyLedger
    diagnostics: list
    summary: dict
    files: dict


def _xi_norm_rates(xi_old, xi_new, dt, lengths):
    dxi = (xi_new - xi_old) / dt
    l2 = float(np.dot(xi_new**2, lengths) + np.dot(dxi**2, lengths))
    linf = float(np.abs(xi_new).max() + np.abs(dxi).max())
    return l2, linf


def run(cfg, observer=None, write=True):
    """Integrate to T; ``observer(step, state)`` is called after every configured step."""
    start = time.perf_counter()
    sim = Simulation(cfg)
    g = sim.grid
    state = sim.initial_state()
    ledger = EnergyLedger(sim.constants)
    ledger.append(state)
    mass0 = np.array([domain_integral(g, state.charges.c_plus), domain_integral(g, state.charges.c_minus)])
    lengths = g.boundary_face_lengths()
    diag = [dict(t=0.0, dt=0.0, picard_iterations=0, picard_factor=0.0, e_reg=audit_regularized_energy(state),
                 grad_sqrt_c=grad_sqrt_c(state), hessian_psi=hessian_psi(state), xi_w12_sq=0.0, xi_w11_inf=0.0,
                 div_max=0.0)]
    files = {}
    vtk_dir, every = cfg["out.vtk_dir"], cfg["out.vtk_every"]

    def snapshot(n, s):
        if write and vtk_dir and every and n % every == 0:
            path = os.path.join(vtk_dir, f"state_{n:06d}.vtk")
            write_vtk(path, s)
            files.setdefault("vtk", []).append(path)

    snapshot(0, state)
    if observer:
        observer(0, state)
    dt = cfg["time.dt"]
    w12 = w11 = 0.0
    try:
        for n in range(1, cfg.steps + 1):
            target = n * dt
            subs = sim.advance(state, target - state.t)
            for new, info in subs:
                h = new.t - state.t
                work = boundary_work(state, new.xi, h)
                a, b = _xi_norm_rates(state.xi, new.xi, h, lengths)
                w12 += h * a
                w11 += h * b
                _check(new, mass0, ledger)
                ledger.append(new, work=work)
                diag.append(dict(t=new.t, dt=h, picard_iterations=info.iterations, picard_factor=info.max_factor,
                                 e_reg=audit_regularized_energy(new), grad_sqrt_c=grad_sqrt_c(new),
                                 hessian_psi=hessian_psi(new), xi_w12_sq=w12, xi_w11_inf=w11,
                                 div_max=float(np.abs(divergence_mac(new.flow.v)).max())))
                state = new
            snapshot(n, state)
            if observer:
                observer(n, state)
    except Exception as exc:
        if write:
            exc.dump_path = dump_state(_dump_path(cfg), state)
        raise
    summary = _summary(ledger, diag, mass0, time.perf_counter() - start)
    if write:
        if cfg["out.ledger"]:
            ledger.write_csv(cfg["out.ledger"])
            files["ledger"] = cfg["out.ledger"]
            files["diagnostics"] = diagnostics_path(cfg["out.ledger"])
            write_rows(files["diagnostics"], diag, DIAGNOSTIC_COLUMNS)
        if cfg["out.summary"]:
            write_summary(cfg["out.summary"], summary)
            files["summary"] = cfg["out.summary"]
    return RunResult(state, ledger, diag, summary, files)


def _dump_path(cfg):
    if cfg["out.dump"]:
        return cfg["out.dump"]
    for key in ("out.ledger", "out.summary"):
        if cfg[key]:
            return os.path.splitext(cfg[key])[0] + "_last_good.npz"
    return os.path.abspath("anisokin_last_good.npz")


def _check(state, mass0, ledger):
    if not state.is_finite():
        raise InvariantViolation(f"non-finite field at t={state.t}")
    g = state.grid
    mass = np.array([domain_integral(g, state.charges.c_plus), domain_integral(g, state.charges.c_minus)])
    drift = np.abs(mass - mass0) / np.maximum(np.abs(mass0), 1e-300)
    if np.any((drift > MASS_ABORT) & (np.abs(mass0) > 0)):
        raise InvariantViolation(f"mass drift {drift.max():.3e} at t={state.t}")
    for name, value, where in negative_excursions(state.charges):
        ledger.excursions.append(dict(t=state.t, species=name, value=value, cell=where))
        if value < NEGATIVE_ABORT:
            raise InvariantViolation(f"{name} = {value:.3e} at cell {where}, t={state.t}")


def _summary(ledger, diag, mass0, wall):
    rho = np.array([r["residual"] for r in ledger.rows])
    mp, mm = ledger.column("mass_plus"), ledger.column("mass_minus")
    drift = 0.0
    for m, m0 in ((mp, mass0[0]), (mm, mass0[1])):
        if m0 != 0:
            drift = max(drift, float(np.abs(m - m0).max() / abs(m0)))
    t = ledger.column("t")
    cum_w = np.concatenate([[0.0], np.cumsum(np.diff(t) * ledger.column("dissipation")[1:])])
    e_reg = np.array([d["e_reg"] for d in diag])
    xi_norms = np.array([d["xi_w12_sq"] + d["xi_w11_inf"] for d in diag])
    C, crossings = gronwall_envelope(t, e_reg, cum_w, xi_norms)
    kin = ledger.column("kinetic")
    return dict(steps=len(ledger) - 1, max_rho=float(np.abs(rho).max()), max_rho_signed=float(rho.max()),
                mass_drift=drift, min_c=float(min(ledger.column("min_plus").min(), ledger.column("min_minus").min())),
                wall_time=wall, excursions=len(ledger.excursions),
                picard_max_iterations=int(max(d["picard_iterations"] for d in diag)),
                picard_max_factor=float(max(d["picard_factor"] for d in diag)),
                mean_kinetic=float(trapezoid(kin, t) / t[-1]) if t[-1] > 0 else 0.0,
                gronwall_C=C, gronwall_crossings=crossings)


@dataclass
class SweepReport:
    kappas: list
    distances: dict          # kappa -> {field: distance, "total": ...}
    rate: float

    @property
    def totals(self):
        return [self.distances[k]["total"] for k in self.kappas]

    def monotone(self):
        """Distances decrease as κ decreases (kappas sorted descending)."""
        order = sorted(self.kappas, reverse=True)
        d = [self.distances[k]["total"] for k in order]
        return all(b < a for a, b in zip(d[:-1], d[1:]))

    def rows(self):
        return [dict(kappa=k, **self.distances[k]) for k in self.kappas]


def _trajectory_fields(state):
    v = state.flow.v
    return dict(v=(v.u.copy(), v.v.copy()), c_plus=state.charges.c_plus.copy(),
                c_minus=state.charges.c_minus.copy(), psi=state.psi.copy())


def kappa_sweep(cfg, kappas):
    """L²(Ω×(0,T)) distances of (v, c±, ψ) to the κ = 0 run, plus a fitted log-log rate."""
    kappas = [float(k) for k in kappas]
    proxy = laplacian_proxy(cfg.director())
    for k in kappas:
        if k < 0:
            raise ConfigError(f"kappa {k!r} is negative")
        if k > 0:
            check_gate(k, proxy, cfg["reg.c_gate"])
    ref = []
    run(cfg.replace(reg__kappa=0.0), observer=lambda n, s: ref.append(_trajectory_fields(s)), write=False)
    g = cfg.grid
    dt = cfg["time.dt"]
    out = {}
    for k in kappas:
        acc = dict(v=0.0, c_plus=0.0, c_minus=0.0, psi=0.0)

        def observe(n, s):
            if n == 0:
                return
            cur = _trajectory_fields(s)
            r = ref[n]
            acc["v"] += dt * g.cell_area * sum(float(np.sum((a - b) ** 2)) for a, b in zip(cur["v"], r["v"]))
            for name in ("c_plus", "c_minus", "psi"):
                acc[name] += dt * g.cell_area * float(np.sum((cur[name] - r[name]) ** 2))

        if k == 0:
            out[k] = {name: 0.0 for name in acc} | {"total": 0.0}
            continue
        run(cfg.replace(reg__kappa=k), observer=observe, write=False)
        dist = {name: math.sqrt(val) for name, val in acc.items()}
        dist["total"] = math.sqrt(sum(val for val in acc.values()))
        out[k] = dist
    pos = [k for k in kappas if k > 0 and out[k]["total"] > 0]
    rate = float("nan")
    if len(pos) >= 2:
        rate = float(np.polyfit(np.log(pos), np.log([out[k]["total"] for k in pos]), 1)[0])
    return SweepReport(kappas, out, rate)
