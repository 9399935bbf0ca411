"""Anisotropic Poisson problem with Robin boundary data and the resolvent S_κ.

The discrete operator is the Hessian of the quadratic form

    Q(ψ) = Σ_xfaces a11 (δxψ)² + Σ_yfaces a22 (δyψ)² + Σ_vertices 2 a12 δxψ δyψ
           + Σ_boundary k τ ψ_0²,          k = 2 / (2 + τ h_n),

scaled by the cell area, so it is symmetric by construction.  ``δxψ, δyψ`` at
interior vertices are averages of the two adjacent face differences, which is
the usual corner-averaged 9-point stencil for the off-diagonal flux.  The
boundary term comes from eliminating the boundary value ψ_b of the half-cell
Robin closure ``-(ψ_0 - ψ_b)/(h_n/2) + τ ψ_b = ξ``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, ParameterError, StructuralError


@dataclass
class RobinBC:
    tau: float
    xi: np.ndarray

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError("Robin coefficient tau must be positive")
        self.xi = np.asarray(self.xi, float)
        if not np.isfinite(self.xi).all():
            raise ParameterError("boundary datum xi must be finite")

    @classmethod
    def homogeneous(cls, grid, tau):
        return cls(tau, np.zeros(grid.n_boundary))


def _face_weights(grid):
    """Normal spacing h_n for every boundary face (left, right, bottom, top)."""
    return np.concatenate([np.full(2 * grid.ny, grid.hx), np.full(2 * grid.nx, grid.hy)])


@dataclass
class RobinOperator:
    """Assembled ``-∇·(E∇·)`` with Robin closure, as a CSR matrix per unit cell area."""

    grid: object
    tensor: object
    tau: float
    matrix: sp.csr_matrix
    quad: sp.csr_matrix = field(repr=False)  # interior part of Q, without the Robin term

    @property
    def n(self):
        return self.grid.size

    def robin_factor(self):
        return 2.0 / (2.0 + self.tau * _face_weights(self.grid))

    def boundary_source(self, xi):
        """Right-hand-side contribution of the boundary datum, per unit cell area."""
        g = self.grid
        xi = np.asarray(xi, float)
        if xi.shape != (g.n_boundary,):
            raise StructuralError(f"xi needs {g.n_boundary} entries")
        i, j = g.boundary_cells()
        out = np.zeros(g.shape)
        np.add.at(out, (i, j), self.robin_factor() * xi * g.boundary_face_lengths())
        return out / g.cell_area

    def rhs(self, source, xi):
        return np.asarray(source, float) + self.boundary_source(xi)

    def apply(self, psi):
        return (self.matrix @ np.ravel(psi)).reshape(self.grid.shape)

    def boundary_values(self, psi, xi):
        """Reconstructed ψ_b on the boundary faces."""
        g = self.grid
        i, j = g.boundary_cells()
        h2 = 2.0 / _face_weights(g)
        return (np.asarray(xi, float) + h2 * psi[i, j]) / (h2 + self.tau)

    def field_energy(self, psi, xi):
        """½∫|∇ψ|²_E including the half-cell gradients up to the boundary."""
        g = self.grid
        flat = np.ravel(psi)
        interior = float(flat @ (self.quad @ flat))
        i, j = g.boundary_cells()
        pb = self.boundary_values(psi, xi)
        half = float(np.sum(2.0 / _face_weights(g) * (psi[i, j] - pb) ** 2 * g.boundary_face_lengths()))
        return 0.5 * (interior + half)

    def boundary_energy(self, psi, xi):
        pb = self.boundary_values(psi, xi)
        return 0.5 * self.tau * float(np.dot(pb**2, self.grid.boundary_face_lengths()))

    def dense(self):
        return self.matrix.toarray()


def _index(grid):
    return np.arange(grid.size).reshape(grid.shape)


def _interior_quadratic(grid, tensor):
    """Interior part of Q as a symmetric sparse matrix (not scaled by cell area)."""
    g = grid
    idx = _index(g)
    rows, cols, vals = [], [], []

    def add_pair(a, b, w):
        # w * (ψ_b - ψ_a)^2
        rows.extend([a, b, a, b])
        cols.extend([a, b, b, a])
        vals.extend([w, w, -w, -w])

    a11f = 0.5 * (tensor.a11[1:, :] + tensor.a11[:-1, :])
    add_pair(idx[:-1, :].ravel(), idx[1:, :].ravel(), (a11f * g.hy / g.hx).ravel())
    a22f = 0.5 * (tensor.a22[:, 1:] + tensor.a22[:, :-1])
    add_pair(idx[:, :-1].ravel(), idx[:, 1:].ravel(), (a22f * g.hx / g.hy).ravel())

    a12v = 0.25 * (tensor.a12[:-1, :-1] + tensor.a12[1:, :-1] + tensor.a12[:-1, 1:] + tensor.a12[1:, 1:])
    if np.any(a12v != 0.0):
        corners = [idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[:-1, 1:].ravel(), idx[1:, 1:].ravel()]
        sx = (-1.0, 1.0, -1.0, 1.0)
        sy = (-1.0, -1.0, 1.0, 1.0)
        w = a12v.ravel()
        for a in range(4):
            for b in range(4):
                coef = 0.25 * (sx[a] * sy[b] + sy[a] * sx[b])
                if coef != 0.0:
                    rows.append(corners[a])
                    cols.append(corners[b])
                    vals.append(coef * w)
    rows = np.concatenate([np.atleast_1d(r) for r in rows])
    cols = np.concatenate([np.atleast_1d(c) for c in cols])
    vals = np.concatenate([np.atleast_1d(v) for v in vals])
    return sp.csr_matrix((vals, (rows, cols)), shape=(g.size, g.size))


def assemble_anisotropic_robin(grid, tensor, tau):
    """Symmetric positive definite discretisation of ``-∇·(E∇ψ)`` with Robin closure."""
    if not tau > 0:
        raise ParameterError("Robin coefficient tau must be positive")
    lo, _ = tensor.eigenvalues()
    if not np.all(lo > 0):
        raise ParameterError("tensor field is not uniformly elliptic")
    quad = _interior_quadratic(grid, tensor)
    i, j = grid.boundary_cells()
    k = 2.0 / (2.0 + tau * _face_weights(grid))
    diag = np.zeros(grid.size)
    np.add.at(diag, _index(grid)[i, j], k * tau * grid.boundary_face_lengths())
    matrix = ((quad + sp.diags(diag)) / grid.cell_area).tocsr()
    return RobinOperator(grid, tensor, tau, matrix, quad)


def solve_spd(A, rhs, tol=1e-10, maxit=None, x0=None, precond="none"):
    """Conjugate-gradient solve of ``A x = rhs`` to relative residual ``tol``."""
    matrix = A.matrix if isinstance(A, RobinOperator) else sp.csr_matrix(A)
    shape = np.shape(rhs)
    b = np.ravel(rhs).astype(float)
    n = b.size
    if matrix.shape != (n, n):
        raise StructuralError("operator and right-hand side sizes differ")
    maxit = 10 * n if maxit is None else int(maxit)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(shape)
    M = None
    if precond == "jacobi":
        M = sp.diags(1.0 / matrix.diagonal())
    elif precond != "none":
        raise ParameterError(f"unknown preconditioner {precond!r}")
    x0 = None if x0 is None else np.ravel(x0).astype(float)
    x, info = spla.cg(matrix, b, x0=x0, rtol=tol, atol=0.0, maxiter=maxit, M=M)
    res = np.linalg.norm(b - matrix @ x)
    if info != 0 or not np.isfinite(res):
        raise ConvergenceError(f"CG stopped after {maxit} iterations with relative residual {res / bnorm:.3e}",
                               residual=res / bnorm, iterations=maxit)
    return x.reshape(shape)


class PoissonSolver:
    """Repeated solves with one operator: CG with warm starts, or a cached LU."""

    def __init__(self, op, method="cg", tol=1e-10, maxit=None, precond="none"):
        if method not in ("cg", "direct"):
            raise ParameterError(f"unknown poisson solver {method!r}")
        self.op = op
        self.method = method
        self.tol = tol
        self.maxit = maxit
        self.precond = precond
        self._lu = spla.splu(op.matrix.tocsc()) if method == "direct" else None
        self._resolvents = {}

    def solve(self, rhs, x0=None):
        if self._lu is not None:
            b = np.ravel(rhs).astype(float)
            if not b.any():
                return np.zeros(np.shape(rhs))
            return self._lu.solve(b).reshape(np.shape(rhs))
        return solve_spd(self.op, rhs, self.tol, self.maxit, x0, self.precond)

    def potential(self, charge, xi, gamma=1.0, x0=None):
        """ψ solving ``-∇·(E∇ψ) = γ·charge`` with ``E∇ψ·n + τψ = ξ``."""
        return self.solve(self.op.rhs(gamma * np.asarray(charge), xi), x0)

    def resolvent(self, f, kappa, x0=None):
        """(I + κ A)^{-1} f with the homogeneous Robin operator A."""
        if kappa < 0:
            raise ParameterError("kappa must be nonnegative")
        f = np.asarray(f, float)
        if kappa == 0:
            return f.copy()
        mat = self._resolvents.get(kappa)
        if mat is None:
            mat = (sp.identity(self.op.n, format="csr") + kappa * self.op.matrix).tocsr()
            self._resolvents[kappa] = mat
        return solve_spd(mat, f, self.tol, self.maxit, x0, self.precond)


def robin_resolvent_skappa(op, c_plus, c_minus, kappa, tol=1e-10, maxit=None):
    """φ = S_κ(c⁺ − c⁻) = (I − κΔ_E)^{-1}(c⁺ − c⁻) with homogeneous Robin data."""
    if kappa < 0:
        raise ParameterError("kappa must be nonnegative")
    f = np.asarray(c_plus, float) - np.asarray(c_minus, float)
    if kappa == 0:
        return f
    mat = sp.identity(op.n, format="csr") + kappa * op.matrix
    return solve_spd(mat, f, tol, maxit)
