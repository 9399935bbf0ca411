import numpy as np
import pytest
from scipy.optimize import brentq
from hypothesis import given, strategies as st

from anisokin.anisotropy import PRESETS, TensorField, preset_director
from anisokin.errors import ConvergenceError, ParameterError
from anisokin.grid import Grid, domain_integral
from anisokin.poisson import (PoissonSolver, RobinBC, assemble_anisotropic_robin, robin_resolvent_skappa,
                              solve_spd)


def five_point_robin(nx, ny, tau, lx=1.0, ly=1.0):
    """Loop-by-loop isotropic Robin Laplacian, written independently of the assembly code."""
    hx, hy = lx / nx, ly / ny
    n = nx * ny
    A = np.zeros((n, n))
    at = lambda i, j: i * ny + j
    for i in range(nx):
        for j in range(ny):
            r = at(i, j)
            for di, dj, h in ((1, 0, hx), (-1, 0, hx), (0, 1, hy), (0, -1, hy)):
                ii, jj = i + di, j + dj
                if 0 <= ii < nx and 0 <= jj < ny:
                    A[r, r] += 1 / h**2
                    A[r, at(ii, jj)] -= 1 / h**2
                else:
                    # ψ_b from (ψ_b - ψ_0)/(h/2) + τ ψ_b = ξ; the flux τψ_b - ξ enters over one cell
                    A[r, r] += (tau * 2 / h) / (2 / h + tau) / h
    return A


def test_isotropic_assembly_matches_hand_coded_stencil():
    for nx, ny, tau in ((4, 4, 1.0), (5, 7, 2.5)):
        g = Grid(nx, ny, 1.0, 1.3)
        op = assemble_anisotropic_robin(g, TensorField.identity(g), tau)
        ref = five_point_robin(nx, ny, tau, 1.0, 1.3)
        assert np.abs(op.dense() - ref).max() < 1e-12 * np.abs(ref).max()


@pytest.mark.parametrize("name", PRESETS)
def test_assembly_symmetric_positive_definite(name):
    g = Grid(8, 8)
    op = assemble_anisotropic_robin(g, preset_director(name, g, eps=1.5).permittivity(), 1.0)
    A = op.dense()
    assert np.abs(A - A.T).max() == 0.0
    assert np.linalg.eigvalsh(A).min() > 0


def test_smallest_eigenvalue_isotropic():
    g = Grid(8, 8)
    A = assemble_anisotropic_robin(g, TensorField.identity(g), 1.0).dense()
    lam = np.linalg.eigvalsh(A).min()
    assert lam > 0
    # separable oracle: twice the smallest eigenvalue of the 1-D Robin matrix
    h = 1 / 8
    T1 = np.diag(np.full(8, 2.0)) - np.diag(np.ones(7), 1) - np.diag(np.ones(7), -1)
    T1[0, 0] = T1[-1, -1] = 1.0 + (2 * h) / (2 + h)
    T1 /= h**2
    assert lam == pytest.approx(2 * np.linalg.eigvalsh(T1).min(), rel=1e-12)
    # continuum limit: -u'' = k² u with u' = τu at both ends, symmetric mode k tan(k/2) = τ
    k = brentq(lambda k: k * np.tan(k / 2) - 1.0, 0.1, 3.0)
    assert lam == pytest.approx(2 * k**2, rel=1e-2)


def test_assembly_rejects_bad_parameters():
    g = Grid(4, 4)
    with pytest.raises(ParameterError):
        assemble_anisotropic_robin(g, TensorField.identity(g), 0.0)
    bad = TensorField(g, np.ones(g.shape), 2 * np.ones(g.shape), np.ones(g.shape))
    with pytest.raises(ParameterError):
        assemble_anisotropic_robin(g, bad, 1.0)
    with pytest.raises(ParameterError):
        RobinBC(-1.0, np.zeros(g.n_boundary))
    with pytest.raises(ParameterError):
        RobinBC(1.0, np.full(g.n_boundary, np.nan))


def test_solve_spd_examples():
    g = Grid(12, 10)
    op = assemble_anisotropic_robin(g, preset_director("vortex", g).permittivity(), 1.0)
    ones = np.ones(g.shape)
    x = solve_spd(op, op.apply(ones), tol=1e-12)
    assert np.abs(x - 1).max() < 1e-9
    assert np.all(solve_spd(op, np.zeros(g.shape)) == 0)
    b = op.apply(ones)
    x = solve_spd(op, b, tol=1e-10, precond="jacobi")
    assert np.linalg.norm(op.apply(x) - b) <= 1e-10 * np.linalg.norm(b) * 1.01


def test_solve_spd_maxit_error_carries_residual():
    g = Grid(16, 16)
    op = assemble_anisotropic_robin(g, TensorField.identity(g), 1.0)
    with pytest.raises(ConvergenceError) as err:
        solve_spd(op, np.random.default_rng(0).random(g.shape), maxit=3)
    assert err.value.residual > 1e-10 and err.value.iterations == 3


def test_cg_and_direct_agree(rng):
    g = Grid(16, 12)
    op = assemble_anisotropic_robin(g, preset_director("quadrant", g).permittivity(), 2.0)
    charge = rng.standard_normal(g.shape)
    xi = rng.standard_normal(g.n_boundary)
    a = PoissonSolver(op, "cg", tol=1e-12).potential(charge, xi, gamma=0.5)
    b = PoissonSolver(op, "direct").potential(charge, xi, gamma=0.5)
    assert np.abs(a - b).max() < 1e-9


def test_energy_splits_into_field_and_boundary(rng):
    g = Grid(10, 9)
    op = assemble_anisotropic_robin(g, preset_director("vortex", g, eps=0.8).permittivity(), 1.7)
    psi = rng.standard_normal(g.shape)
    zero = np.zeros(g.n_boundary)
    quad = 0.5 * psi.ravel() @ (op.matrix @ psi.ravel()) * g.cell_area
    assert op.field_energy(psi, zero) + op.boundary_energy(psi, zero) == pytest.approx(quad, rel=1e-12)


def test_robin_reconstruction_satisfies_closure(rng):
    g = Grid(6, 6)
    op = assemble_anisotropic_robin(g, TensorField.identity(g), 3.0)
    psi = rng.standard_normal(g.shape)
    xi = rng.standard_normal(g.n_boundary)
    pb = op.boundary_values(psi, xi)
    i, j = g.boundary_cells()
    h = np.concatenate([np.full(2 * g.ny, g.hx), np.full(2 * g.nx, g.hy)])
    assert np.allclose((pb - psi[i, j]) / (h / 2) + 3.0 * pb, xi)


def test_field_energy_of_linear_potential():
    # ψ = x with d = (0, 1) in the interior: d ⟂ ∇ψ, so |∇ψ|²_E = 1 and the energy is ½
    g = Grid(32, 32)
    d = preset_director("uniform_x_interior_masked", g)
    d = type(d)(g, d.dy, d.dx, 0.5, 1.0)  # swap to (0, 1)
    op = assemble_anisotropic_robin(g, d.permittivity(), 1.0)
    X, _ = g.cell_centers()
    xb, _ = g.boundary_face_centers()
    n = g.boundary_normals()
    xi = n[:, 0] + 1.0 * xb  # consistent Robin datum for ψ = x
    assert op.field_energy(X, xi) == pytest.approx(0.5, rel=1e-12)


def test_skappa_identity_at_zero(rng):
    g = Grid(6, 6)
    op = assemble_anisotropic_robin(g, TensorField.identity(g), 1.0)
    cp, cm = rng.random(g.shape), rng.random(g.shape)
    assert np.all(robin_resolvent_skappa(op, cp, cm, 0.0) == cp - cm)
    with pytest.raises(ParameterError):
        robin_resolvent_skappa(op, cp, cm, -1.0)


def test_skappa_on_eigenvector():
    g = Grid(8, 8)
    op = assemble_anisotropic_robin(g, preset_director("vortex", g).permittivity(), 1.0)
    w, V = np.linalg.eigh(op.dense())
    for k in (0, 5, 40):
        e = V[:, k].reshape(g.shape)
        for kappa in (1e-1, 1e-2):
            phi = robin_resolvent_skappa(op, e, np.zeros(g.shape), kappa, tol=1e-13)
            assert np.abs(phi - e / (1 + kappa * w[k])).max() < 1e-10


def test_skappa_loses_mass_through_robin_boundary(rng):
    g = Grid(8, 8)
    op = assemble_anisotropic_robin(g, TensorField.identity(g), 1.0)
    f = rng.random(g.shape)
    phi = robin_resolvent_skappa(op, f, np.zeros(g.shape), 0.1, tol=1e-13)
    dense = np.linalg.solve(np.eye(g.size) + 0.1 * op.dense(), f.ravel()).reshape(g.shape)
    assert np.abs(phi - dense).max() < 1e-10
    loss = domain_integral(g, f) - domain_integral(g, phi)
    assert loss > 0


@given(st.integers(0, 2**31 - 1), st.sampled_from(PRESETS), st.floats(1e-4, 10.0))
def test_skappa_contracts_in_l2(seed, name, kappa):
    g = Grid(8, 8)
    op = assemble_anisotropic_robin(g, preset_director(name, g, eps=2.0).permittivity(), 1.0)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    phi = robin_resolvent_skappa(op, f, np.zeros(g.shape), kappa, tol=1e-13)
    assert np.linalg.norm(phi) <= np.linalg.norm(f) * (1 + 1e-10)


def test_skappa_gradient_norm_grows_as_kappa_shrinks():
    g = Grid(16, 16)
    op = assemble_anisotropic_robin(g, TensorField.identity(g), 1.0)
    f = np.zeros(g.shape)
    f[8, 8] = 1.0 / g.cell_area  # unit L¹ mass
    norms = []
    for kappa in (1e-1, 1e-2, 1e-3, 1e-4):
        phi = robin_resolvent_skappa(op, f, np.zeros(g.shape), kappa, tol=1e-13)
        norms.append(op.field_energy(phi, np.zeros(g.n_boundary)))
    assert all(b > a for a, b in zip(norms[:-1], norms[1:]))
