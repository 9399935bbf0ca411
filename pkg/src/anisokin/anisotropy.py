"""Director fields and the anisotropy tensors ``I + s d⊗d``."""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StructuralError
from .grid import Grid

PRESETS = ("zero", "uniform_x_interior_masked", "vortex", "quadrant")


@dataclass
class DirectorField:
    """Cell-centred director ``d = (dx, dy)`` with mobility and permittivity strengths."""

    grid: Grid
    dx: np.ndarray
    dy: np.ndarray
    lam: float = 0.5
    eps: float = 0.5

    def __post_init__(self):
        self.dx = self.grid.check_scalar(self.dx, "director dx")
        self.dy = self.grid.check_scalar(self.dy, "director dy")
        if not (self.lam > 0 and self.eps > 0):
            raise ParameterError("anisotropy strengths lambda and epsilon must be positive")

    def norm2(self):
        return self.dx**2 + self.dy**2

    def mobility(self):
        """Λ(d) = I + λ d⊗d."""
        return tensor_from_director(self, self.lam)

    def permittivity(self):
        """E(d) = I + ε d⊗d."""
        return tensor_from_director(self, self.eps)

    def mirrored_x(self):
        """Reflection x -> lx - x (d_x flips sign)."""
        return DirectorField(self.grid, -self.dx[::-1, :], self.dy[::-1, :].copy(), self.lam, self.eps)


@dataclass
class TensorField:
    """Symmetric 2x2 tensor field at cell centres; only ``a12`` is stored off-diagonal."""

    grid: Grid
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    def __post_init__(self):
        for name in ("a11", "a12", "a22"):
            setattr(self, name, self.grid.check_scalar(getattr(self, name), name))

    @classmethod
    def identity(cls, grid):
        return cls(grid, np.ones(grid.shape), np.zeros(grid.shape), np.ones(grid.shape))

    def eigenvalues(self):
        """Pointwise (smaller, larger) eigenvalues."""
        mean = 0.5 * (self.a11 + self.a22)
        rad = np.sqrt((0.5 * (self.a11 - self.a22)) ** 2 + self.a12**2)
        return mean - rad, mean + rad

    def apply(self, wx, wy):
        return self.a11 * wx + self.a12 * wy, self.a12 * wx + self.a22 * wy

    def quadratic(self, wx, wy):
        return self.a11 * wx * wx + 2.0 * self.a12 * wx * wy + self.a22 * wy * wy


def tensor_from_director(df, strength):
    if not strength > 0:
        raise ParameterError(f"anisotropy strength must be positive, got {strength}")
    return TensorField(df.grid, 1.0 + strength * df.dx**2, strength * df.dx * df.dy,
                       1.0 + strength * df.dy**2)


def tangentiality_residual(df):
    """max |d·n| over boundary cells, n the outward normal of the adjacent edge."""
    return float(max(np.abs(df.dx[0, :]).max(), np.abs(df.dx[-1, :]).max(),
                     np.abs(df.dy[:, 0]).max(), np.abs(df.dy[:, -1]).max()))


def _unit(dx, dy):
    r = np.hypot(dx, dy)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, dx / safe, 0.0), np.where(r > 0, dy / safe, 0.0)


def preset_director(name, grid, lam=0.5, eps=0.5):
    """Deterministic director presets; every preset vanishes on the boundary ring."""
    X, Y = grid.cell_centers()
    cx, cy = 0.5 * grid.lx, 0.5 * grid.ly
    if name == "zero":
        dx, dy = np.zeros(grid.shape), np.zeros(grid.shape)
    elif name == "uniform_x_interior_masked":
        dx, dy = np.ones(grid.shape), np.zeros(grid.shape)
    elif name == "vortex":
        dx, dy = _unit(-(Y - cy), X - cx)
    elif name == "quadrant":
        # diagonal directions alternating between quadrants, mirror-antisymmetric in x
        sx = np.where(X < cx, 1.0, -1.0)
        sy = np.where(Y < cy, 1.0, -1.0)
        dx, dy = sx * sy / np.sqrt(2.0), np.full(grid.shape, 1.0 / np.sqrt(2.0))
    else:
        raise ParameterError(f"unknown director preset {name!r}; choose from {PRESETS}")
    ring = grid.ring_mask()
    dx = np.where(ring, 0.0, dx)
    dy = np.where(ring, 0.0, dy)
    return DirectorField(grid, dx, dy, lam, eps)


def director_from_function(grid, f, lam=0.5, eps=0.5, mask_ring=False):
    """Sample ``f(x, y) -> (dx, dy)`` at cell centres."""
    X, Y = grid.cell_centers()
    dx, dy = f(X, Y)
    dx = np.broadcast_to(dx, grid.shape).astype(float)
    dy = np.broadcast_to(dy, grid.shape).astype(float)
    if mask_ring:
        ring = grid.ring_mask()
        dx, dy = np.where(ring, 0.0, dx), np.where(ring, 0.0, dy)
    if dx.shape != grid.shape:
        raise StructuralError("director function returned wrong shape")
    return DirectorField(grid, dx.copy(), dy.copy(), lam, eps)


def laplacian_proxy(df):
    """max|d| + max|Δ_h d| with mirror closure; discrete stand-in for the W^{2,inf} norm."""
    g = df.grid
    out = 0.0
    for comp in (df.dx, df.dy):
        p = np.pad(comp, 1, mode="edge")
        lap = ((p[2:, 1:-1] - 2 * comp + p[:-2, 1:-1]) / g.hx**2
               + (p[1:-1, 2:] - 2 * comp + p[1:-1, :-2]) / g.hy**2)
        out = max(out, np.abs(lap).max())
    return float(np.sqrt(df.norm2()).max() + out)
