"""Energy, dissipation and the discrete audit of the energy inequality.

With general constants the tested equations combine into

    d/dt [ (βRe/α)·½∫|v|² + Σ∫c(ln c + 1) + (β/γ)(½∫|∇ψ|²_E + τ/2∫_Γψ²) ]
        + (β/α)∫|∇v|² + (1/Pe) Σ∫|2∇√c ± β√c∇ψ|²_Λ  =  (β/γ)∫_Γ ψ ∂tξ,

which is the familiar balance when every constant equals one.  Ledger columns
store the unweighted pieces; the weights live in :class:`Constants`.
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation
from .grid import domain_integral
from .navier_stokes import kinetic_energy, velocity_dissipation
from .state import Constants

LEDGER_COLUMNS = ("t", "kinetic", "entropy", "field", "boundary", "kappa_term", "dissipation",
                  "boundary_work", "mass_plus", "mass_minus", "min_plus", "min_minus", "residual")
ENTROPY_FLOOR = 1e-300
NEGATIVE_TOL = 1e-12


def _nonneg(c):
    c = np.asarray(c, float)
    if c.min() < -NEGATIVE_TOL:
        raise InvariantViolation(f"concentration {c.min():.3e} is below -{NEGATIVE_TOL:g}")
    return np.clip(c, 0.0, None)


def entropy_density(c):
    """c (ln c + 1) with 0·ln 0 = 0."""
    c = _nonneg(c)
    safe = np.where(c > ENTROPY_FLOOR, c, 1.0)
    return np.where(c > ENTROPY_FLOOR, c * (np.log(safe) + 1.0), 0.0)


def entropy(grid, c_plus, c_minus):
    return domain_integral(grid, entropy_density(c_plus)) + domain_integral(grid, entropy_density(c_minus))


def log_mean(a, b):
    """Logarithmic mean (a - b)/(ln a - ln b); zero if either argument is zero."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    pos = (a > 0) & (b > 0)
    sa = np.where(pos, a, 1.0)
    sb = np.where(pos, b, 1.0)
    x = sa / sb - 1.0
    small = np.abs(x) < 1e-8
    xs = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0 + 0.5 * x, xs / np.log1p(xs))
    return np.where(pos, sb * ratio, 0.0)


def _face_pairs(s):
    return (s[:-1, :], s[1:, :]), (s[:, :-1], s[:, 1:])


def charge_dissipation_density(grid, c, sign, psi, lam, beta=1.0):
    """Face vector a = 2∇√c ± β√c∇ψ on interior faces (√c on faces by logarithmic mean).

    Returns (ax, ay) on interior x- and y-faces; boundary faces carry zero flux.
    """
    r = np.sqrt(_nonneg(c))
    (xl, xr), (yb, yt) = _face_pairs(r)
    (pl, pr), (pb, pt) = _face_pairs(psi)
    ax = (2.0 * (xr - xl) + sign * beta * log_mean(xl, xr) * (pr - pl)) / grid.hx
    ay = (2.0 * (yt - yb) + sign * beta * log_mean(yb, yt) * (pt - pb)) / grid.hy
    return ax, ay


def lambda_norm_sq(grid, ax, ay, tensor):
    """∫ a·Λa with normal parts on faces and the off-diagonal part at cell centres."""
    a11f = 0.5 * (tensor.a11[1:, :] + tensor.a11[:-1, :])
    a22f = 0.5 * (tensor.a22[:, 1:] + tensor.a22[:, :-1])
    total = np.sum(a11f * ax**2) + np.sum(a22f * ay**2)
    if np.any(tensor.a12 != 0):
        cx = np.zeros(grid.shape)
        cy = np.zeros(grid.shape)
        cx[:-1, :] += 0.5 * ax
        cx[1:, :] += 0.5 * ax
        cy[:, :-1] += 0.5 * ay
        cy[:, 1:] += 0.5 * ay
        total += np.sum(2.0 * tensor.a12 * cx * cy)
    return float(total * grid.cell_area)


def charge_dissipation(state):
    g = state.grid
    k = state.constants
    out = 0.0
    for sign, c in state.charges.species():
        ax, ay = charge_dissipation_density(g, c, sign, state.psi, state.mobility, k.beta)
        out += lambda_norm_sq(g, ax, ay, state.mobility)
    return out


def dissipation(state):
    """W = (β/α)∫|∇v|² + (1/Pe)Σ±∫|2∇√c ± β√c∇ψ|²_Λ."""
    k = state.constants
    return k.w_viscous * velocity_dissipation(state.flow.v) + k.w_charge * charge_dissipation(state)


def energy(state):
    """Energy components (unweighted) plus the weighted totals ``E`` and ``E_reg``."""
    g = state.grid
    k = state.constants
    row = dict(
        kinetic=kinetic_energy(state.flow.v),
        entropy=entropy(g, state.charges.c_plus, state.charges.c_minus),
        field=state.poisson.field_energy(state.psi, state.xi),
        boundary=state.poisson.boundary_energy(state.psi, state.xi),
        kappa_term=0.5 * k.kappa * float(np.sum(state.phi**2) * g.cell_area),
    )
    row["E"] = total_energy(row, k)
    row["E_reg"] = row["E"] + k.beta * k.gamma * row["kappa_term"]
    return row


def total_energy(row, k):
    return (k.w_kinetic * row["kinetic"] + row["entropy"]
            + k.w_field * (row["field"] + row["boundary"]))


def audit_regularized_energy(state):
    """E_reg = E + (κ/2)∫φ² (weighted by βγ for general constants)."""
    return energy(state)["E_reg"]


def boundary_work(state_old, xi_new, dt):
    """∫_Γ ψⁿ (ξⁿ⁺¹ − ξⁿ)/dt dσ with ψ on the faces from the Robin reconstruction."""
    g = state_old.grid
    pb = state_old.poisson.boundary_values(state_old.psi, state_old.xi)
    return float(np.dot(pb * (np.asarray(xi_new) - state_old.xi), g.boundary_face_lengths()) / dt)


def grad_sqrt_c(state):
    """Diagnostic Σ±∫|∇√c|²_Λ."""
    g = state.grid
    out = 0.0
    for c in (state.charges.c_plus, state.charges.c_minus):
        r = np.sqrt(_nonneg(c))
        ax = (r[1:, :] - r[:-1, :]) / g.hx
        ay = (r[:, 1:] - r[:, :-1]) / g.hy
        out += lambda_norm_sq(g, ax, ay, state.mobility)
    return out


def hessian_psi(state):
    """Diagnostic ∫|∇²ψ|² from interior second differences."""
    g = state.grid
    p = state.psi
    dxx = (p[2:, 1:-1] - 2 * p[1:-1, 1:-1] + p[:-2, 1:-1]) / g.hx**2
    dyy = (p[1:-1, 2:] - 2 * p[1:-1, 1:-1] + p[1:-1, :-2]) / g.hy**2
    dxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * g.hx * g.hy)
    return float(np.sum(dxx**2 + 2 * dxy**2 + dyy**2) * g.cell_area)


@dataclass
class EnergyLedger:
    constants: Constants = field(default_factory=Constants)
    rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    excursions: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def energies(self):
        return np.array([total_energy(r, self.constants) for r in self.rows])

    def append(self, state, dt=None, work=0.0):
        """Record one time level; ``work`` is the boundary work rate over the step that produced it."""
        e = energy(state)
        g = state.grid
        if self.rows and not state.t > self.rows[-1]["t"]:
            raise InvariantViolation("ledger times must increase strictly")
        row = dict(t=state.t, **{k: e[k] for k in ("kinetic", "entropy", "field", "boundary", "kappa_term")},
                   dissipation=dissipation(state), boundary_work=work,
                   mass_plus=domain_integral(g, state.charges.c_plus),
                   mass_minus=domain_integral(g, state.charges.c_minus),
                   min_plus=float(state.charges.c_plus.min()), min_minus=float(state.charges.c_minus.min()),
                   residual=0.0)
        self.rows.append(row)
        if len(self.rows) == 1:
            self._e0 = total_energy(row, self.constants)
            self._acc = 0.0
        else:
            h = row["t"] - self.rows[-2]["t"]
            self._acc += h * (row["dissipation"] - self.constants.w_field * row["boundary_work"])
        row["residual"] = total_energy(row, self.constants) - self._e0 + self._acc
        if not all(math.isfinite(row[c]) for c in LEDGER_COLUMNS):
            raise InvariantViolation(f"non-finite ledger row at t={state.t}")
        return row

    def write_csv(self, path):
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LEDGER_COLUMNS)
            for r in self.rows:
                writer.writerow([repr(float(r[c])) for c in LEDGER_COLUMNS])

    @classmethod
    def read_csv(cls, path, constants=None):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != LEDGER_COLUMNS:
                raise ValueError(f"unexpected ledger header {header}")
            rows = [dict(zip(header, map(float, line))) for line in reader if line]
        return cls(constants or Constants(), rows)


def audit_energy_inequality(ledger, t_index):
    """ρ(t) = E(t) − E(0) + Σ dt·W − (β/γ) Σ dt·(boundary work); the inequality asks ρ ≤ tol(dt)."""
    k = ledger.constants
    rows = ledger.rows[: t_index + 1]
    e0 = total_energy(rows[0], k)
    acc = 0.0
    for prev, cur in zip(rows[:-1], rows[1:]):
        dt = cur["t"] - prev["t"]
        acc += dt * (cur["dissipation"] - k.w_field * cur["boundary_work"])
    return total_energy(rows[-1], k) - e0 + acc


def residual_series(ledger):
    return np.array([audit_energy_inequality(ledger, i) for i in range(len(ledger))])


def gronwall_envelope(times, e_reg, cumulative_w, xi_norms, calibrate=0.1):
    """Fit C in E_reg(t) + ∫W ≤ eᵗ(E_reg(0) + C(ξ-norms + t)) on an initial window.

    Returns (C, number of later rows crossing the envelope).
    """
    times = np.asarray(times)
    lhs = np.asarray(e_reg) + np.asarray(cumulative_w)
    base = np.asarray(xi_norms) + times
    need = (lhs * np.exp(-times) - e_reg[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(base > 0, need / base, 0.0)
    n_cal = max(2, int(calibrate * len(times)))
    C = max(0.0, float(np.max(ratio[:n_cal])))
    envelope = np.exp(times) * (e_reg[0] + C * base)
    crossings = int(np.sum(lhs[n_cal:] > envelope[n_cal:] + 1e-12 * np.abs(envelope[n_cal:]).max()))
    return C, crossings
