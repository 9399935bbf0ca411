"""Staggered (MAC) grid on a rectangle and the discrete operators shared by the solvers.

Scalars live at cell centres as ``(nx, ny)`` arrays indexed ``[i, j]`` with ``i``
running along x.  Velocities and fluxes live on faces: ``u`` has shape
``(nx + 1, ny)`` (x-faces), ``v`` has shape ``(nx, ny + 1)`` (y-faces).

Boundary faces are ordered left, right, bottom, top everywhere a per-face trace
is needed; left/right traces run along j, bottom/top along i.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StructuralError


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ParameterError(f"grid needs at least 4x4 cells, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ParameterError("domain lengths must be positive")

    @property
    def hx(self):
        return self.lx / self.nx

    @property
    def hy(self):
        return self.ly / self.ny

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def area(self):
        return self.lx * self.ly

    @property
    def n_boundary(self):
        return 2 * (self.nx + self.ny)

    def x_centers(self):
        return (np.arange(self.nx) + 0.5) * self.hx

    def y_centers(self):
        return (np.arange(self.ny) + 0.5) * self.hy

    def cell_centers(self):
        """Cell-centre coordinates ``(X, Y)``, each of shape ``(nx, ny)``."""
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing="ij")

    def xface_coords(self):
        x = np.arange(self.nx + 1) * self.hx
        return np.meshgrid(x, self.y_centers(), indexing="ij")

    def yface_coords(self):
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(self.x_centers(), y, indexing="ij")

    def boundary_face_centers(self):
        """Midpoints of all boundary faces, ordered left, right, bottom, top."""
        yc, xc = self.y_centers(), self.x_centers()
        x = np.concatenate([np.zeros(self.ny), np.full(self.ny, self.lx), xc, xc])
        y = np.concatenate([yc, yc, np.zeros(self.nx), np.full(self.nx, self.ly)])
        return x, y

    def boundary_face_lengths(self):
        return np.concatenate([np.full(2 * self.ny, self.hy), np.full(2 * self.nx, self.hx)])

    def boundary_normals(self):
        """Outward unit normals for the boundary faces, shape ``(n_boundary, 2)``."""
        n = np.zeros((self.n_boundary, 2))
        ny, nx = self.ny, self.nx
        n[:ny, 0] = -1.0
        n[ny:2 * ny, 0] = 1.0
        n[2 * ny:2 * ny + nx, 1] = -1.0
        n[2 * ny + nx:, 1] = 1.0
        return n

    def boundary_cells(self):
        """Flat indices of the cells adjacent to each boundary face (same order)."""
        i = np.concatenate([np.zeros(self.ny, int), np.full(self.ny, self.nx - 1),
                            np.arange(self.nx), np.arange(self.nx)])
        j = np.concatenate([np.arange(self.ny), np.arange(self.ny),
                            np.zeros(self.nx, int), np.full(self.nx, self.ny - 1)])
        return i, j

    def ring_mask(self):
        """True on the one-cell ring of cells touching the boundary."""
        mask = np.zeros(self.shape, bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    def split_boundary(self, trace):
        """Split a per-face boundary array into (left, right, bottom, top)."""
        trace = np.asarray(trace, float)
        if trace.shape != (self.n_boundary,):
            raise StructuralError(f"boundary trace needs {self.n_boundary} entries, got {trace.shape}")
        ny, nx = self.ny, self.nx
        return trace[:ny], trace[ny:2 * ny], trace[2 * ny:2 * ny + nx], trace[2 * ny + nx:]

    def check_scalar(self, s, name="field"):
        s = np.asarray(s, float)
        if s.shape != self.shape:
            raise StructuralError(f"{name} has shape {s.shape}, grid expects {self.shape}")
        return s


@dataclass
class MACField:
    """Face-normal vector components on a staggered grid."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        g = self.grid
        self.u = np.asarray(self.u, float)
        self.v = np.asarray(self.v, float)
        if self.u.shape != (g.nx + 1, g.ny) or self.v.shape != (g.nx, g.ny + 1):
            raise StructuralError(
                f"MAC components {self.u.shape}, {self.v.shape} do not match grid {g.nx}x{g.ny}")

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    @classmethod
    def from_functions(cls, grid, fu, fv):
        xu, yu = grid.xface_coords()
        xv, yv = grid.yface_coords()
        return cls(grid, np.broadcast_to(fu(xu, yu), xu.shape).copy(),
                   np.broadcast_to(fv(xv, yv), xv.shape).copy())

    def copy(self):
        return MACField(self.grid, self.u.copy(), self.v.copy())

    def __add__(self, other):
        return MACField(self.grid, self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return MACField(self.grid, self.u - other.u, self.v - other.v)

    def scaled(self, a):
        return MACField(self.grid, a * self.u, a * self.v)

    def enforce_no_slip(self):
        """Zero the boundary normal components in place."""
        self.u[0, :] = self.u[-1, :] = 0.0
        self.v[:, 0] = self.v[:, -1] = 0.0
        return self

    def max_abs(self):
        return max(np.abs(self.u).max(), np.abs(self.v).max())

    def is_finite(self):
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())

    def to_centers(self):
        """Cell-centred components by averaging opposite faces."""
        return 0.5 * (self.u[1:, :] + self.u[:-1, :]), 0.5 * (self.v[:, 1:] + self.v[:, :-1])

    def outward_boundary_trace(self):
        """Outward normal component on the boundary faces (left, right, bottom, top)."""
        return np.concatenate([-self.u[0, :], self.u[-1, :], -self.v[:, 0], self.v[:, -1]])

    def flat(self):
        return np.concatenate([self.u.ravel(), self.v.ravel()])


def divergence_mac(w):
    """Cell-centred divergence of a MAC field."""
    g = w.grid
    return (w.u[1:, :] - w.u[:-1, :]) / g.hx + (w.v[:, 1:] - w.v[:, :-1]) / g.hy


def mirror_ghosts(grid, s):
    """Ghost values equal to the adjacent cell: zero normal gradient."""
    return s[0, :], s[-1, :], s[:, 0], s[:, -1]


def gradient_to_faces(grid, s, ghosts=None):
    """Face-normal gradient of a cell field.

    ``ghosts(grid, s)`` returns the ghost values (left, right, bottom, top) that
    close the boundary stencil; the default mirror closure gives zero flux.
    """
    s = grid.check_scalar(s)
    u = np.empty((grid.nx + 1, grid.ny))
    v = np.empty((grid.nx, grid.ny + 1))
    u[1:-1, :] = (s[1:, :] - s[:-1, :]) / grid.hx
    v[:, 1:-1] = (s[:, 1:] - s[:, :-1]) / grid.hy
    if ghosts is None:
        u[0, :] = u[-1, :] = 0.0
        v[:, 0] = v[:, -1] = 0.0
    else:
        gl, gr, gb, gt = ghosts(grid, s)
        u[0, :] = (s[0, :] - gl) / grid.hx
        u[-1, :] = (gr - s[-1, :]) / grid.hx
        v[:, 0] = (s[:, 0] - gb) / grid.hy
        v[:, -1] = (gt - s[:, -1]) / grid.hy
    return MACField(grid, u, v)


def interp_center_to_face(grid, s):
    """Arithmetic face average; boundary faces copy the adjacent cell."""
    s = grid.check_scalar(s)
    u = np.empty((grid.nx + 1, grid.ny))
    v = np.empty((grid.nx, grid.ny + 1))
    u[1:-1, :] = 0.5 * (s[1:, :] + s[:-1, :])
    u[0, :], u[-1, :] = s[0, :], s[-1, :]
    v[:, 1:-1] = 0.5 * (s[:, 1:] + s[:, :-1])
    v[:, 0], v[:, -1] = s[:, 0], s[:, -1]
    return MACField(grid, u, v)


def domain_integral(grid, s):
    return float(np.sum(grid.check_scalar(s)) * grid.cell_area)


def boundary_integral(grid, trace):
    trace = np.asarray(trace, float)
    if trace.shape != (grid.n_boundary,):
        raise StructuralError(f"boundary trace needs {grid.n_boundary} entries, got {trace.shape}")
    return float(np.dot(trace, grid.boundary_face_lengths()))


def face_integral(w):
    """Midpoint-rule integral of ``u**2`` plus ``v**2`` style face data.

    Each face carries the dual-cell area ``hx*hy`` (boundary faces half of it).
    """
    g = w.grid
    wu = np.ones_like(w.u)
    wu[0, :] = wu[-1, :] = 0.5
    wv = np.ones_like(w.v)
    wv[:, 0] = wv[:, -1] = 0.5
    return float((np.sum(wu * w.u) + np.sum(wv * w.v)) * g.cell_area)


def sample(grid, f):
    """Evaluate ``f(x, y)`` at the cell centres."""
    X, Y = grid.cell_centers()
    return np.broadcast_to(f(X, Y), grid.shape).astype(float).copy()
