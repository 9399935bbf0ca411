"""Nernst–Planck transport for the two ion species.

Face fluxes combine first-order upwind advection with a Scharfetter–Gummel
fit of diffusion plus drift along the face normal.  Off-diagonal mobility
terms use corner-averaged tangential differences and enter the implicit
operator without sign control, so positivity is only guaranteed for d = 0.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import exprel

from .errors import StepRejected
from .grid import MACField, domain_integral


@dataclass
class ChargePair:
    c_plus: np.ndarray
    c_minus: np.ndarray

    def copy(self):
        return ChargePair(self.c_plus.copy(), self.c_minus.copy())

    def swapped(self):
        return ChargePair(self.c_minus.copy(), self.c_plus.copy())

    @property
    def charge(self):
        return self.c_plus - self.c_minus

    def species(self):
        return ((1, self.c_plus), (-1, self.c_minus))


def bernoulli(z):
    """B(z) = z / (e^z - 1), with B(0) = 1."""
    return 1.0 / exprel(np.asarray(z, float))


@lru_cache(maxsize=16)
def _stencils(grid):
    """Grid-only sparse maps used to assemble the drift-diffusion operator.

    Returns (avg_x, gy_x, div_x, avg_y, gx_y, div_y): averages and tangential
    derivatives onto interior x/y faces, and the face-to-cell divergence.
    """
    nx, ny = grid.nx, grid.ny
    idx = np.arange(grid.size).reshape(nx, ny)

    # interior x-faces (i-1/2, j), i = 1..nx-1
    fx = np.arange((nx - 1) * ny).reshape(nx - 1, ny)
    L, R = idx[:-1, :], idx[1:, :]
    avg_x = sp.csr_matrix((np.full(2 * fx.size, 0.5), (np.r_[fx.ravel(), fx.ravel()], np.r_[L.ravel(), R.ravel()])),
                          shape=(fx.size, grid.size))
    div_x = sp.csr_matrix((np.r_[np.full(fx.size, 1.0), np.full(fx.size, -1.0)] / grid.hx,
                           (np.r_[L.ravel(), R.ravel()], np.r_[fx.ravel(), fx.ravel()])),
                          shape=(grid.size, fx.size))
    gy_x = _tangential(fx, idx, ny, grid.hy, axis=0)

    fy = np.arange(nx * (ny - 1)).reshape(nx, ny - 1)
    B, T = idx[:, :-1], idx[:, 1:]
    avg_y = sp.csr_matrix((np.full(2 * fy.size, 0.5), (np.r_[fy.ravel(), fy.ravel()], np.r_[B.ravel(), T.ravel()])),
                          shape=(fy.size, grid.size))
    div_y = sp.csr_matrix((np.r_[np.full(fy.size, 1.0), np.full(fy.size, -1.0)] / grid.hy,
                           (np.r_[B.ravel(), T.ravel()], np.r_[fy.ravel(), fy.ravel()])),
                          shape=(grid.size, fy.size))
    gx_y = _tangential(fy.T, idx.T, nx, grid.hx, axis=1)
    return avg_x, gy_x, div_x, avg_y, gx_y, div_y


def _tangential(faces, idx, nt, h, axis):
    """Tangential derivative at interior faces from the two adjacent interior vertices.

    ``faces`` has shape (n_normal - 1, nt) and ``idx`` (n_normal, nt), both with the
    tangential index last.  Vertex k sits between tangential cells k-1 and k; only
    k = 1..nt-1 are interior.  Faces next to a wall use their single interior vertex.
    """
    rows, cols, vals = [], [], []
    nn = idx.shape[0]
    for k_off in (0, 1):
        k = np.arange(nt) + k_off  # vertex index for each tangential slot
        valid = (k >= 1) & (k <= nt - 1)
        weight = np.where(valid[None, :], 0.5, 0.0)
        weight = np.broadcast_to(weight, faces.shape).copy()
        # faces with only one interior vertex take it with full weight
        weight[:, 0] = np.where(k_off == 1, 1.0, 0.0)
        weight[:, -1] = np.where(k_off == 0, 1.0, 0.0)
        kk = np.clip(k, 1, nt - 1)
        for side in (slice(0, nn - 1), slice(1, nn)):
            upper = idx[side][:, kk]
            lower = idx[side][:, kk - 1]
            w = weight / (2.0 * h)
            rows += [faces.ravel(), faces.ravel()]
            cols += [upper.ravel(), lower.ravel()]
            vals += [w.ravel(), -w.ravel()]
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(faces.size, idx.size))
    m.sum_duplicates()
    return m


def _template_entries(div, S):
    """(row, col, value, face) for every product term of ``div @ diag(w) @ S``."""
    dc = div.tocoo()
    S = S.tocsr()
    r, f, d = dc.row, dc.col, dc.data
    counts = S.indptr[f + 1] - S.indptr[f]
    first = np.repeat(S.indptr[f], counts)
    offset = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    k = first + offset
    return np.repeat(r, counts), S.indices[k], np.repeat(d, counts) * S.data[k], np.repeat(f, counts)


@lru_cache(maxsize=16)
def _pattern(grid, cross):
    """Fixed sparsity of M and the map P with ``M.data = P @ w`` for stacked face coefficients w."""
    avg_x, gy_x, div_x, avg_y, gx_y, div_y = _stencils(grid)
    rows, cols, vals, coef = [], [], [], []
    offset = 0
    for axis, avg, gt, div in ((0, avg_x, gy_x, div_x), (1, avg_y, gx_y, div_y)):
        lo, hi = _face_cells(grid, axis)
        nf = lo.size
        f = np.arange(nf)
        e_lo = sp.csr_matrix((np.ones(nf), (f, lo)), shape=(nf, grid.size))
        e_hi = sp.csr_matrix((np.ones(nf), (f, hi)), shape=(nf, grid.size))
        templates = [e_lo, e_hi] + ([gt, avg] if cross else [])
        for S in templates:
            r, c, v, ff = _template_entries(div, S)
            rows.append(r)
            cols.append(c)
            vals.append(v)
            coef.append(ff + offset)
            offset += nf
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    shape = (grid.size, grid.size)
    key = rows * grid.size + cols
    uniq, pos = np.unique(key, return_inverse=True)
    indptr = np.searchsorted(uniq // grid.size, np.arange(grid.size + 1))
    indices = uniq % grid.size
    P = sp.csr_matrix((np.concatenate(vals), (pos, np.concatenate(coef))), shape=(uniq.size, offset))
    diag = np.searchsorted(uniq, np.arange(grid.size) * (grid.size + 1))
    return indptr, indices, P, diag, shape


def _face_coefficients(grid, psi, lam, sb, cross):
    avg_x, gy_x, _, avg_y, gx_y, _ = _stencils(grid)
    pf = np.ravel(psi)
    out = []
    for axis, avg, gt, a_nn, h in ((0, avg_x, gy_x, lam.a11, grid.hx), (1, avg_y, gx_y, lam.a22, grid.hy)):
        lo, hi = _face_cells(grid, axis)
        D = avg @ a_nn.ravel()
        delta = -sb * (pf[hi] - pf[lo])
        # SG normal flux (D/h)[B(-δ) c_lo - B(δ) c_hi]
        out += [D / h * bernoulli(-delta), -D / h * bernoulli(delta)]
        if cross:
            a12 = avg @ lam.a12.ravel()
            out += [-a12, -sb * a12 * (gt @ pf)]
    return np.concatenate(out)


def assemble_np_operator(grid, psi, lam, sign, beta):
    """Sparse M with ``M c = ∇·J(c)``, ``J = -Λ(∇c + sign·β c ∇ψ)``, zero flux on the boundary."""
    psi = grid.check_scalar(psi, "psi")
    cross = bool(np.any(lam.a12 != 0.0))
    indptr, indices, P, _, shape = _pattern(grid, cross)
    data = P @ _face_coefficients(grid, psi, lam, sign * beta, cross)
    return sp.csr_matrix((data, indices.copy(), indptr.copy()), shape=shape)


def _step_matrix(grid, psi, lam, sign, beta, scale):
    """I + scale·M assembled directly on the fixed pattern."""
    cross = bool(np.any(lam.a12 != 0.0))
    indptr, indices, P, diag, shape = _pattern(grid, cross)
    data = scale * (P @ _face_coefficients(grid, psi, lam, sign * beta, cross))
    data[diag] += 1.0
    return sp.csr_matrix((data, indices, indptr), shape=shape)


def _face_cells(grid, axis):
    idx = np.arange(grid.size).reshape(grid.shape)
    if axis == 0:
        return idx[:-1, :].ravel(), idx[1:, :].ravel()
    return idx[:, :-1].ravel(), idx[:, 1:].ravel()


def upwind_flux(grid, c, v):
    """Advective face flux ``c_up v``; boundary faces carry zero."""
    fu = np.zeros_like(v.u)
    fv = np.zeros_like(v.v)
    u_in = v.u[1:-1, :]
    fu[1:-1, :] = np.where(u_in > 0, c[:-1, :], c[1:, :]) * u_in
    w_in = v.v[:, 1:-1]
    fv[:, 1:-1] = np.where(w_in > 0, c[:, :-1], c[:, 1:]) * w_in
    return MACField(grid, fu, fv)


def np_face_flux(grid, c, sign, v, psi, lam, Pe=1.0, beta=1.0):
    """Total face flux ``Pe c_up v - Λ(∇c ± β c ∇ψ)``; zero on every boundary face."""
    adv = upwind_flux(grid, c, v).scaled(Pe)
    nx1 = (grid.nx - 1) * grid.ny
    J = _diffusive_face_flux(grid, c, psi, lam, sign, beta)
    adv.u[1:-1, :] += J[:nx1].reshape(grid.nx - 1, grid.ny)
    adv.v[:, 1:-1] += J[nx1:].reshape(grid.nx, grid.ny - 1)
    return adv


def _diffusive_face_flux(grid, c, psi, lam, sign, beta):
    avg_x, gy_x, _, avg_y, gx_y, _ = _stencils(grid)
    sb = sign * beta
    cf, pf = np.ravel(c), np.ravel(psi)
    out = []
    for axis, avg, gt, a_nn, h in ((0, avg_x, gy_x, lam.a11, grid.hx), (1, avg_y, gx_y, lam.a22, grid.hy)):
        lo, hi = _face_cells(grid, axis)
        D = avg @ a_nn.ravel()
        delta = -sb * (pf[hi] - pf[lo])
        J = D / h * (bernoulli(-delta) * cf[lo] - bernoulli(delta) * cf[hi])
        a12 = avg @ lam.a12.ravel()
        if np.any(a12 != 0.0):
            J = J - a12 * (gt @ cf + sb * (gt @ pf) * (avg @ cf))
        out.append(J)
    return np.concatenate(out)


def cfl_limit(grid, v, cfl=0.9):
    rate = np.abs(v.u).max() / grid.hx + np.abs(v.v).max() / grid.hy
    return np.inf if rate == 0 else cfl / rate


def _advect_explicit(grid, c, v, dt):
    """``c - dt ∇·(c_up v)`` written as a nonnegative combination of old values."""
    u, w = v.u, v.v
    out_rate = (np.maximum(u[1:, :], 0) + np.maximum(-u[:-1, :], 0)) / grid.hx \
        + (np.maximum(w[:, 1:], 0) + np.maximum(-w[:, :-1], 0)) / grid.hy
    res = c * (1.0 - dt * out_rate)
    # inflow from neighbours
    res[:-1, :] += dt * np.maximum(-u[1:-1, :], 0) * c[1:, :] / grid.hx
    res[1:, :] += dt * np.maximum(u[1:-1, :], 0) * c[:-1, :] / grid.hx
    res[:, :-1] += dt * np.maximum(-w[:, 1:-1], 0) * c[:, 1:] / grid.hy
    res[:, 1:] += dt * np.maximum(w[:, 1:-1], 0) * c[:, :-1] / grid.hy
    return res


def _lu(matrix):
    # symmetric ordering and diagonal pivots: elimination of an M-matrix then keeps signs
    return spla.splu(matrix.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                     options={"SymmetricMode": True})


REFINE_TOL = 1e-12
REFINE_MAXIT = 8


class FactorCache:
    """Per-species LU factors reused across Picard iterations and steps.

    A stale factor preconditions iterative refinement on the current matrix; a
    fresh factorization happens when refinement stalls or would produce a
    negative value from nonnegative data (so the sign-preserving direct solve
    keeps the last word on positivity).
    """

    def __init__(self):
        self.factors = {}
        self.refactorizations = 0

    def solve(self, key, A, b, x0=None):
        lu = self.factors.get(key)
        if lu is not None:
            x = _refine(lu, A, b, x0)
            if x is not None and not (x.min() < 0.0 <= b.min()):
                return x
        lu = _lu(A)
        self.factors[key] = lu
        self.refactorizations += 1
        return lu.solve(b)


def _refine(lu, A, b, x0):
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    x = lu.solve(b) if x0 is None else np.array(x0, float)
    prev = np.inf
    for _ in range(REFINE_MAXIT):
        r = b - A @ x
        rn = np.linalg.norm(r)
        if rn <= REFINE_TOL * bnorm:
            # one Richardson sweep: columns of A sum to one, so this restores the mass of b
            return x + r
        if rn > 0.25 * prev:
            return None
        prev = rn
        x = x + lu.solve(r)
    return None


def advect_pair(pair, v, dt):
    """Explicit upwind transport of both species (the right-hand sides of the implicit solves)."""
    return ChargePair(_advect_explicit(v.grid, pair.c_plus, v, dt), _advect_explicit(v.grid, pair.c_minus, v, dt))


def np_step(pair, v, psi, lam, dt, Pe=1.0, beta=1.0, cfl=0.9, cache=None, guess=None, advected=None):
    """Advance both species by one step: explicit upwind advection, implicit drift-diffusion.

    Without ``cache`` every solve is a fresh sign-preserving LU.  With a
    :class:`FactorCache` factors are reused (``guess`` is an optional ChargePair
    used as the starting iterate).  ``advected`` may carry a precomputed
    :func:`advect_pair` result for the same (pair, v, dt).
    """
    grid = v.grid
    if dt <= 0:
        raise ValueError("dt must be positive")
    limit = cfl_limit(grid, v, cfl)
    if dt > limit:
        raise StepRejected(f"advective CFL violated: dt={dt:g} > {limit:g}", max_dt=limit)
    advected = advect_pair(pair, v, dt) if advected is None else advected
    out = []
    for (sign, _), (_, adv) in zip(pair.species(), advected.species()):
        rhs = adv.ravel()
        A = _step_matrix(grid, psi, lam, sign, beta, dt / Pe)
        if cache is None:
            x = _lu(A).solve(rhs)
        else:
            x0 = None
            if guess is not None:
                x0 = (guess.c_plus if sign > 0 else guess.c_minus).ravel()
            x = cache.solve(sign, A, rhs, x0)
        out.append(x.reshape(grid.shape))
    return ChargePair(*out)


def total_mass(grid, pair):
    return domain_integral(grid, pair.c_plus), domain_integral(grid, pair.c_minus)


def min_value_audit(pair):
    return float(pair.c_plus.min()), float(pair.c_minus.min())


def negative_excursions(pair, threshold=0.0):
    """(species, value, (i, j)) for the most negative cell of each species below threshold."""
    found = []
    for name, c in (("c_plus", pair.c_plus), ("c_minus", pair.c_minus)):
        k = np.unravel_index(np.argmin(c), c.shape)
        if c[k] < threshold:
            found.append((name, float(c[k]), (int(k[0]), int(k[1]))))
    return found
