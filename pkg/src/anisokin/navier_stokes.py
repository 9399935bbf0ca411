"""Incompressible momentum step on the MAC grid by non-incremental Chorin projection.

Discretely,

    Re (v* - v)/dt + Re (v·∇)v|_upwind - Δ_h v* = F,       F = -α (c⁺ - c⁻) ∇ψ,
    Δ_h p = (Re/dt) ∇_h·v*,   v = v* - (dt/Re) ∇_h p,

with no-slip walls (ghost reflection for tangential components) and a
zero-mean pressure gauge.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import StepRejected
from .grid import MACField, divergence_mac, face_integral, gradient_to_faces, interp_center_to_face


@dataclass
class FlowState:
    v: MACField
    p: np.ndarray
    Re: float = 1.0
    alpha: float = 1.0

    @classmethod
    def at_rest(cls, grid, Re=1.0, alpha=1.0):
        return cls(MACField.zeros(grid), np.zeros(grid.shape), Re, alpha)

    def copy(self):
        return FlowState(self.v.copy(), self.p.copy(), self.Re, self.alpha)


def _lap1d(n, h, ghost_wall):
    """1-D second difference; ``ghost_wall`` reflects u = 0 at half-cell walls."""
    main = np.full(n, -2.0)
    if ghost_wall:
        main[0] = main[-1] = -3.0
    return sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1]) / h**2


@lru_cache(maxsize=16)
def velocity_laplacians(grid):
    """Sparse vector Laplacian on interior u- and v-faces with no-slip walls."""
    nx, ny = grid.nx, grid.ny
    Lu = sp.kron(_lap1d(nx - 1, grid.hx, False), sp.identity(ny)) \
        + sp.kron(sp.identity(nx - 1), _lap1d(ny, grid.hy, True))
    Lv = sp.kron(_lap1d(nx, grid.hx, True), sp.identity(ny - 1)) \
        + sp.kron(sp.identity(nx), _lap1d(ny - 1, grid.hy, False))
    return Lu.tocsr(), Lv.tocsr()


@lru_cache(maxsize=16)
def _helmholtz(grid, nu_dt):
    Lu, Lv = velocity_laplacians(grid)
    return (spla.splu((sp.identity(Lu.shape[0]) - nu_dt * Lu).tocsc()),
            spla.splu((sp.identity(Lv.shape[0]) - nu_dt * Lv).tocsc()))


@lru_cache(maxsize=16)
def neumann_laplacian(grid):
    """div∘grad on cell centres with zero normal gradient; kernel = constants."""
    nx, ny = grid.nx, grid.ny

    def lap(n, h):
        main = np.full(n, -2.0)
        main[0] = main[-1] = -1.0
        return sp.diags([np.ones(n - 1), main, np.ones(n - 1)], [-1, 0, 1]) / h**2

    return (sp.kron(lap(nx, grid.hx), sp.identity(ny)) + sp.kron(sp.identity(nx), lap(ny, grid.hy))).tocsr()


@lru_cache(maxsize=16)
def _pressure_lu(grid):
    # pin the first cell; the dropped equation is implied by compatibility
    return spla.splu(neumann_laplacian(grid)[1:, 1:].tocsc())


def kinetic_energy(v):
    """½∫|v|² with the face midpoint rule."""
    return 0.5 * face_integral(MACField(v.grid, v.u**2, v.v**2))


def velocity_dissipation(v):
    """∫|∇v|² consistent with the discrete viscous operator."""
    g = v.grid
    Lu, Lv = velocity_laplacians(g)
    ui, vi = v.u[1:-1, :].ravel(), v.v[:, 1:-1].ravel()
    return float(-(ui @ (Lu @ ui) + vi @ (Lv @ vi)) * g.cell_area)


def coulomb_force(grid, c_plus, c_minus, psi, alpha=1.0):
    """Face force ``-α (c⁺ - c⁻) ∇ψ``; boundary normal components are zero."""
    rho = interp_center_to_face(grid, np.asarray(c_plus) - np.asarray(c_minus))
    grad = gradient_to_faces(grid, psi)
    f = MACField(grid, -alpha * rho.u * grad.u, -alpha * rho.v * grad.v)
    return f.enforce_no_slip()


def advection_upwind(v):
    """First-order upwind ``(v·∇)v`` on interior faces (zero on the boundary)."""
    g = v.grid
    u, w = v.u, v.v
    au = np.zeros_like(u)
    aw = np.zeros_like(w)

    # u-faces: transverse velocity from the four surrounding v-faces
    ui = u[1:-1, :]
    wbar = 0.25 * (w[:-1, :-1] + w[1:, :-1] + w[:-1, 1:] + w[1:, 1:])
    dxm = (u[1:-1, :] - u[:-2, :]) / g.hx
    dxp = (u[2:, :] - u[1:-1, :]) / g.hx
    up = np.pad(ui, ((0, 0), (1, 1)))
    up[:, 0], up[:, -1] = -ui[:, 0], -ui[:, -1]
    dym = (up[:, 1:-1] - up[:, :-2]) / g.hy
    dyp = (up[:, 2:] - up[:, 1:-1]) / g.hy
    au[1:-1, :] = ui * np.where(ui > 0, dxm, dxp) + wbar * np.where(wbar > 0, dym, dyp)

    wi = w[:, 1:-1]
    ubar = 0.25 * (u[:-1, :-1] + u[1:, :-1] + u[:-1, 1:] + u[1:, 1:])
    dym = (w[:, 1:-1] - w[:, :-2]) / g.hy
    dyp = (w[:, 2:] - w[:, 1:-1]) / g.hy
    wp = np.pad(wi, ((1, 1), (0, 0)))
    wp[0, :], wp[-1, :] = -wi[0, :], -wi[-1, :]
    dxm = (wp[1:-1, :] - wp[:-2, :]) / g.hx
    dxp = (wp[2:, :] - wp[1:-1, :]) / g.hx
    aw[:, 1:-1] = wi * np.where(wi > 0, dym, dyp) + ubar * np.where(ubar > 0, dxm, dxp)
    return MACField(g, au, aw)


def advective_cfl_limit(v, cfl=0.9):
    g = v.grid
    rate = np.abs(v.u).max() / g.hx + np.abs(v.v).max() / g.hy
    return np.inf if rate == 0 else cfl / rate


def ns_predict(state, force, dt, cfl=0.9):
    """Tentative velocity with explicit upwind advection and implicit viscosity."""
    v = state.v
    g = v.grid
    limit = advective_cfl_limit(v, cfl)
    if dt > limit:
        raise StepRejected(f"momentum CFL violated: dt={dt:g} > {limit:g}", max_dt=limit)
    adv = advection_upwind(v)
    lu_u, lu_v = _helmholtz(g, dt / state.Re)
    # (I - dt/Re Δ) v* = v - dt (v·∇)v + dt/Re F
    ru = v.u[1:-1, :] - dt * adv.u[1:-1, :] + dt / state.Re * force.u[1:-1, :]
    rv = v.v[:, 1:-1] - dt * adv.v[:, 1:-1] + dt / state.Re * force.v[:, 1:-1]
    out = MACField.zeros(g)
    out.u[1:-1, :] = lu_u.solve(ru.ravel()).reshape(ru.shape)
    out.v[:, 1:-1] = lu_v.solve(rv.ravel()).reshape(rv.shape)
    return out


def pressure_project(v_star, dt, Re=1.0):
    """Remove the gradient part of ``v_star``; returns (v, p) with zero-mean p."""
    g = v_star.grid
    div = divergence_mac(v_star)
    phi = np.zeros(g.size)
    if np.any(div != 0.0):
        # solve for phi = (dt/Re) p; the mean of div is roundoff and would pile up in the pinned cell
        rhs = (div - div.mean()).ravel()
        L = neumann_laplacian(g)
        lu = _pressure_lu(g)
        for _ in range(3):
            r = rhs - L @ phi
            r -= r.mean()
            if np.abs(r).max() <= 1e-13 * max(1.0, np.abs(rhs).max()):
                break
            phi[1:] += lu.solve(r[1:])
        phi -= phi.mean()
    phi = phi.reshape(g.shape)
    v = (v_star - gradient_to_faces(g, phi)).enforce_no_slip()
    return v, (Re / dt) * phi


def ns_step(state, c_plus, c_minus, psi, dt, cfl=0.9):
    g = state.v.grid
    force = coulomb_force(g, c_plus, c_minus, psi, state.alpha)
    v_star = ns_predict(state, force, dt, cfl)
    v, p = pressure_project(v_star, dt, state.Re)
    return FlowState(v, p, state.Re, state.alpha)
