"""Manufactured-solution convergence studies for the Poisson and Nernst–Planck operators.

Forcing terms and boundary data are derived symbolically with sympy from the
chosen exact fields, so the expected values never pass through the stencils
being checked.
"""

from dataclasses import dataclass

import numpy as np
import sympy as sy

from .anisotropy import DirectorField
from .grid import Grid, sample

X, Y = sy.symbols("x y", real=True)

PSI_EXACT = sy.cos(sy.pi * X) * sy.cos(sy.pi * Y)
# smooth, tangential on the unit square, genuinely off-diagonal in the interior
DIRECTOR = (sy.sin(sy.pi * X) / sy.sqrt(2), sy.sin(sy.pi * Y) / sy.sqrt(2))
C_EXACT = 2 + sy.cos(sy.pi * X) * sy.cos(2 * sy.pi * Y)


@dataclass
class ConvergenceStudy:
    sizes: list
    errors: list

    @property
    def orders(self):
        e = np.asarray(self.errors)
        n = np.asarray(self.sizes, float)
        return [float(x) for x in np.log(e[:-1] / e[1:]) / np.log(n[1:] / n[:-1])]

    def rows(self):
        orders = [float("nan")] + self.orders
        return [(n, e, o) for n, e, o in zip(self.sizes, self.errors, orders)]


def _tensor_sym(strength):
    d1, d2 = DIRECTOR
    return (1 + strength * d1 * d1, strength * d1 * d2, 1 + strength * d2 * d2)


def _lamb(expr):
    return sy.lambdify((X, Y), expr, "numpy")


def poisson_manufactured(strength=1.0, tau=1.0):
    """Symbolic forcing ``f = -∇·(E∇ψ*)`` and per-edge Robin data for ψ*."""
    a11, a12, a22 = _tensor_sym(strength)
    gx, gy = sy.diff(PSI_EXACT, X), sy.diff(PSI_EXACT, Y)
    fx, fy = a11 * gx + a12 * gy, a12 * gx + a22 * gy
    f = sy.simplify(-(sy.diff(fx, X) + sy.diff(fy, Y)))
    xi = {  # E∇ψ·n + τψ on each edge
        "left": -fx + tau * PSI_EXACT, "right": fx + tau * PSI_EXACT,
        "bottom": -fy + tau * PSI_EXACT, "top": fy + tau * PSI_EXACT,
    }
    return f, xi


def _director(grid, strength):
    d1, d2 = (_lamb(c) for c in DIRECTOR)
    Xc, Yc = grid.cell_centers()
    dx = np.broadcast_to(d1(Xc, Yc), grid.shape).astype(float)
    dy = np.broadcast_to(d2(Xc, Yc), grid.shape).astype(float)
    return DirectorField(grid, dx, dy, lam=strength, eps=strength)


def _boundary_trace(grid, edges):
    xb, yb = grid.boundary_face_centers()
    ny, nx = grid.ny, grid.nx
    parts = []
    for name, sl in (("left", slice(0, ny)), ("right", slice(ny, 2 * ny)),
                     ("bottom", slice(2 * ny, 2 * ny + nx)), ("top", slice(2 * ny + nx, None))):
        vals = _lamb(edges[name])(xb[sl], yb[sl])
        parts.append(np.broadcast_to(vals, xb[sl].shape).astype(float))
    return np.concatenate(parts)


def l2_error(grid, a, b):
    return float(np.sqrt(np.sum((a - b) ** 2) * grid.cell_area))


def poisson_mms(sizes=(32, 64, 128), strength=1.0, tau=1.0, solver="direct"):
    from .poisson import PoissonSolver, assemble_anisotropic_robin

    f, xi_edges = poisson_manufactured(strength, tau)
    f_num, psi_num = _lamb(f), _lamb(PSI_EXACT)
    errors = []
    for n in sizes:
        grid = Grid(n, n)
        tensor = _director(grid, strength).permittivity()
        op = assemble_anisotropic_robin(grid, tensor, tau)
        xi = _boundary_trace(grid, xi_edges)
        psi = PoissonSolver(op, method=solver, tol=1e-12).potential(sample(grid, f_num), xi)
        errors.append(l2_error(grid, psi, sample(grid, psi_num)))
    return ConvergenceStudy(list(sizes), errors)


def np_manufactured(sign=1, strength=1.0, beta=1.0):
    """Source g with ``c* + ∇·J(c*) = g`` for ``J = -Λ(∇c + sign·β c ∇ψ*)``.

    Both c* and ψ* have zero normal derivative and the director is tangential,
    so c* satisfies the no-flux condition exactly.
    """
    a11, a12, a22 = _tensor_sym(strength)
    cx = sy.diff(C_EXACT, X) + sign * beta * C_EXACT * sy.diff(PSI_EXACT, X)
    cy = sy.diff(C_EXACT, Y) + sign * beta * C_EXACT * sy.diff(PSI_EXACT, Y)
    jx, jy = -(a11 * cx + a12 * cy), -(a12 * cx + a22 * cy)
    return C_EXACT + sy.diff(jx, X) + sy.diff(jy, Y)


def np_mms(sizes=(32, 64, 128), strength=1.0, beta=1.0, sign=1):
    """One unit implicit step with source; checks the drift-diffusion operator."""
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    from .nernst_planck import assemble_np_operator

    g_num = _lamb(np_manufactured(sign, strength, beta))
    c_num, psi_num = _lamb(C_EXACT), _lamb(PSI_EXACT)
    errors = []
    for n in sizes:
        grid = Grid(n, n)
        lam = _director(grid, strength).mobility()
        M = assemble_np_operator(grid, sample(grid, psi_num), lam, sign, beta)
        A = (sp.identity(grid.size) + M).tocsc()
        c = spla.spsolve(A, sample(grid, g_num).ravel()).reshape(grid.shape)
        errors.append(l2_error(grid, c, sample(grid, c_num)))
    return ConvergenceStudy(list(sizes), errors)

