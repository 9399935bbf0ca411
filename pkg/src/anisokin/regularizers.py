"""Dense laboratory for the resolvent regularisers R_κ, R_κ^{1/2} and S_κ.

Operators are stored as positive semidefinite matrices ``A`` so that every
resolvent is ``(I + κA)^{-1}``: for the Stokes kind ``A`` is the discrete
Stokes operator on the divergence-free subspace, for the Robin kind it is
``-Δ_E`` with homogeneous Robin closure.
"""

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ParameterError, SpectralError
from .navier_stokes import velocity_laplacians
from .poisson import assemble_anisotropic_robin

MAX_CELLS = 1024
KAPPAS = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass
class DenseOperator:
    kind: str
    matrix: np.ndarray
    basis: np.ndarray = None      # orthonormal basis of ker(div), Stokes kind only
    projector: np.ndarray = None  # Leray projector P = basis basisᵀ

    @property
    def n(self):
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self):
        """Eigenvalues (ascending) and orthonormal eigenvectors of the symmetric part."""
        w, V = np.linalg.eigh(0.5 * (self.matrix + self.matrix.T))
        return w, V

    def symmetry_defect(self):
        return float(np.abs(self.matrix - self.matrix.T).max())


def mac_divergence_matrix(grid):
    """Divergence from interior u-faces then interior v-faces to cell centres."""
    nx, ny = grid.nx, grid.ny
    dxm = sp.diags([np.ones(nx - 1), -np.ones(nx - 1)], [0, -1], shape=(nx, nx - 1)) / grid.hx
    dym = sp.diags([np.ones(ny - 1), -np.ones(ny - 1)], [0, -1], shape=(ny, ny - 1)) / grid.hy
    return sp.hstack([sp.kron(dxm, sp.identity(ny)), sp.kron(sp.identity(nx), dym)]).tocsr()


def _check_size(grid):
    if grid.size > MAX_CELLS:
        raise ParameterError(f"dense operators are limited to {MAX_CELLS} cells, got {grid.size}")


def build_dense_stokes(grid):
    _check_size(grid)
    Lu, Lv = velocity_laplacians(grid)
    neg_lap = -sp.block_diag([Lu, Lv]).toarray()
    Z = sla.null_space(mac_divergence_matrix(grid).toarray())
    A = Z.T @ neg_lap @ Z
    return DenseOperator("stokes", 0.5 * (A + A.T), basis=Z, projector=Z @ Z.T)


def build_dense_robin(grid, tensor, tau=1.0):
    _check_size(grid)
    op = assemble_anisotropic_robin(grid, tensor, tau)
    return DenseOperator("robin_laplacian", op.dense())


def operator_sqrt(A, tol=1e-10):
    w, V = A.spectrum
    floor = -tol * max(1.0, abs(w).max())
    if w.min() < floor:
        raise SpectralError(f"operator has eigenvalue {w.min():.3e} below {floor:.1e}")
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return DenseOperator(A.kind + "_sqrt", root, A.basis, A.projector)


def resolvent_matrix(A, kappa):
    if kappa < 0:
        raise ParameterError("kappa must be nonnegative")
    return np.linalg.inv(np.eye(A.n) + kappa * A.matrix)


def resolvent_apply(A, x, kappa):
    """y = (I + κA)^{-1} x."""
    if kappa < 0:
        raise ParameterError("kappa must be nonnegative")
    x = np.asarray(x, float)
    if kappa == 0:
        return x.copy()
    return np.linalg.solve(np.eye(A.n) + kappa * A.matrix, x)


def smooth_vectors(A, trials, rng):
    """Random vectors whose spectral coefficients decay like (1 + μ)^{-2}."""
    w, V = A.spectrum
    coeff = rng.standard_normal((A.n, trials)) / (1.0 + np.clip(w, 0, None))[:, None] ** 2
    X = V @ coeff
    return X / np.linalg.norm(X, axis=0)


@dataclass
class ResolventReport:
    kind: str
    kappas: list
    residual_norms: list            # max over smooth trials of ‖R_κx − x‖
    operator_norm_bounds: list      # max over trials of ‖R_κx‖/‖x‖
    growth_constants: list          # max over trials of ‖A R_κx‖ / ((1 + 1/κ)‖x‖)
    strong_limits: list = field(default_factory=list)   # ‖R_κ x_κ − x‖ with x_κ → x
    weak_pairings: list = field(default_factory=list)   # max |⟨φ, R_κ x_κ − x⟩|
    identity_defects: list = field(default_factory=list)
    spectral_norms: list = field(default_factory=list)
    asymptotic_slope: float = float("nan")
    fitted_slope: float = float("nan")
    sqrt_symmetry_defect: float = float("nan")
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def rows(self):
        return [dict(kappa=k, residual=r, operator_norm=o, growth_constant=c, strong_limit=s,
                     weak_pairing=wp, identity_defect=d)
                for k, r, o, c, s, wp, d in zip(self.kappas, self.residual_norms, self.operator_norm_bounds,
                                                self.growth_constants, self.strong_limits,
                                                self.weak_pairings, self.identity_defects)]

    def write_csv(self, stream):
        rows = self.rows()
        writer = csv.DictWriter(stream, fieldnames=list(rows[0]) + ["asymptotic_slope", "sqrt_symmetry_defect"])
        writer.writeheader()
        for r in rows:
            writer.writerow({**r, "asymptotic_slope": self.asymptotic_slope,
                             "sqrt_symmetry_defect": self.sqrt_symmetry_defect})


def resolvent_suite(A, trials=10, kappas=KAPPAS, seed=0, norm_tol=1e-10):
    """Run the resolvent property checks on a dense operator.

    Items: (1) strong convergence R_κ x_κ → x, (2) weak convergence through dual
    pairings, (3) uniform operator bound, (4) graph-norm growth C(1 + 1/κ).
    Monotonicity of the residuals and the norm bound are asserted; constants and
    slopes are reported.
    """
    if trials < 10:
        raise ParameterError("the suite needs at least 10 trial vectors")
    kappas = sorted(kappas, reverse=True)
    rng = np.random.default_rng(seed)
    X = smooth_vectors(A, trials, rng)
    raw = rng.standard_normal((A.n, trials))
    noise = rng.standard_normal((A.n, trials))
    phi = rng.standard_normal((A.n, trials))
    w, _ = A.spectrum
    report = ResolventReport(A.kind, list(kappas), [], [], [], [])

    per_trial = []
    for k in kappas:
        R = resolvent_matrix(A, k)
        RX = R @ X
        res = np.linalg.norm(RX - X, axis=0)
        per_trial.append(res)
        report.residual_norms.append(float(res.max()))
        Rraw = R @ raw
        report.operator_norm_bounds.append(float((np.linalg.norm(Rraw, axis=0) / np.linalg.norm(raw, axis=0)).max()))
        report.spectral_norms.append(float(np.linalg.norm(R, 2)))
        ARx = A.matrix @ Rraw
        report.growth_constants.append(
            float((np.linalg.norm(ARx, axis=0) / ((1 + 1 / k) * np.linalg.norm(raw, axis=0))).max()))
        defect = np.abs(ARx - (Rraw - raw) / (-k)).max() / max(1.0, np.abs(ARx).max())
        report.identity_defects.append(float(defect))
        xk = X + k * noise
        report.strong_limits.append(float(np.linalg.norm(R @ xk - X, axis=0).max()))
        report.weak_pairings.append(float(np.abs(np.sum(phi * (R @ xk - X), axis=0)).max()))

    per_trial = np.array(per_trial)
    if not np.all(np.diff(per_trial, axis=0) < 0):
        report.failures.append("item 1: residuals not strictly decreasing in kappa")
    if not np.all(np.diff(report.strong_limits) < 0):
        report.failures.append("item 1: R_k(x_k) does not approach x")
    if not np.all(np.diff(report.weak_pairings) < 0):
        report.failures.append("item 2: dual pairings do not decrease")
    bound = 1.0 + norm_tol
    if max(report.operator_norm_bounds) > bound or max(report.spectral_norms) > bound:
        report.failures.append("item 3: resolvent norm exceeds 1")
    logk = np.log(np.asarray(kappas))
    logr = np.log(per_trial)
    slopes = (logr[-2] - logr[-1]) / (logk[-2] - logk[-1])
    report.asymptotic_slope = float(np.mean(slopes))
    report.fitted_slope = float(np.mean(np.polyfit(logk, logr, 1)[0]))
    if w.min() >= -1e-10 * max(1.0, abs(w).max()):
        root = operator_sqrt(A)
        report.sqrt_symmetry_defect = max(
            float(np.abs(Rh - Rh.T).max()) for Rh in (resolvent_matrix(root, k) for k in kappas))
    return report
