import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisokin.anisotropy import (PRESETS, DirectorField, director_from_function, laplacian_proxy, preset_director,
                                 tangentiality_residual, tensor_from_director)
from anisokin.errors import ParameterError
from anisokin.grid import Grid


def _uniform(g, dx, dy, **kw):
    return DirectorField(g, np.full(g.shape, dx), np.full(g.shape, dy), **kw)


def test_tensor_examples():
    g = Grid(4, 4)
    t = tensor_from_director(_uniform(g, 1.0, 0.0), 0.5)
    assert np.all(t.a11 == 1.5) and np.all(t.a12 == 0) and np.all(t.a22 == 1)
    t = tensor_from_director(_uniform(g, 0.0, 0.0), 0.7)
    assert np.all(t.a11 == 1) and np.all(t.a12 == 0) and np.all(t.a22 == 1)
    r = 1 / np.sqrt(2)
    t = tensor_from_director(_uniform(g, r, r), 1.0)
    assert np.allclose([t.a11[0, 0], t.a12[0, 0], t.a22[0, 0]], [1.5, 0.5, 1.5])
    lo, hi = t.eigenvalues()
    assert np.allclose(lo, 1.0) and np.allclose(hi, 2.0)


def test_strength_must_be_positive():
    g = Grid(4, 4)
    with pytest.raises(ParameterError):
        tensor_from_director(_uniform(g, 1.0, 0.0), 0.0)
    with pytest.raises(ParameterError):
        _uniform(g, 1.0, 0.0, lam=-1.0)


def test_tangentiality_examples():
    g = Grid(8, 8)
    assert tangentiality_residual(_uniform(g, 1.0, 0.0)) == 1.0
    assert tangentiality_residual(_uniform(g, 0.0, 0.0)) == 0.0
    assert tangentiality_residual(preset_director("vortex", g)) == 0.0


@pytest.mark.parametrize("name", PRESETS)
def test_presets_tangential_and_elliptic(name):
    g = Grid(16, 12)
    d = preset_director(name, g, lam=0.7, eps=1.3)
    assert tangentiality_residual(d) == 0.0
    for t, s in ((d.mobility(), 0.7), (d.permittivity(), 1.3)):
        lo, hi = t.eigenvalues()
        assert lo.min() >= 1 - 1e-14
        assert hi.max() <= 1 + s * d.norm2().max() + 1e-14


def test_unknown_preset():
    with pytest.raises(ParameterError):
        preset_director("spiral", Grid(8, 8))


def test_vortex_preset_values():
    g = Grid(64, 64)
    d = preset_director("vortex", g)
    X, Y = g.cell_centers()
    # two sample cells: rotational unit field about the centre
    for i, j in ((10, 40), (50, 7)):
        v = np.array([-(Y[i, j] - 0.5), X[i, j] - 0.5])
        assert np.allclose([d.dx[i, j], d.dy[i, j]], v / np.linalg.norm(v))
    interior = ~g.ring_mask()
    assert np.allclose(d.norm2()[interior], 1.0)
    assert np.all(d.norm2()[g.ring_mask()] == 0)


def test_quadrant_preset_geometry():
    g = Grid(16, 16)
    d = preset_director("quadrant", g)
    interior = ~g.ring_mask()
    assert np.allclose(d.norm2()[interior], 1.0)
    # four constant diagonal directions
    dirs = {(round(a, 12), round(b, 12)) for a, b in zip(d.dx[interior], d.dy[interior])}
    assert len(dirs) == 2
    assert d.dx[4, 4] == -d.dx[11, 4] and d.dx[4, 4] == -d.dx[4, 11]


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 5))
def test_director_eigenvector_property(a, b, s):
    g = Grid(4, 4)
    d = _uniform(g, a, b)
    t = tensor_from_director(d, s)
    ax, ay = t.apply(d.dx, d.dy)
    scale = 1 + s * (a * a + b * b)
    assert np.allclose(ax, scale * a) and np.allclose(ay, scale * b)
    px, py = t.apply(-d.dy, d.dx)
    assert np.allclose(px, -b) and np.allclose(py, a)


def test_mobility_and_permittivity_commute():
    g = Grid(10, 10)
    d = preset_director("quadrant", g, lam=0.3, eps=2.0)
    L, E = d.mobility(), d.permittivity()
    for i, j in np.ndindex(g.shape):
        A = np.array([[L.a11[i, j], L.a12[i, j]], [L.a12[i, j], L.a22[i, j]]])
        B = np.array([[E.a11[i, j], E.a12[i, j]], [E.a12[i, j], E.a22[i, j]]])
        assert np.abs(A @ B - B @ A).max() < 1e-14


def test_laplacian_proxy():
    g = Grid(8, 8)
    assert laplacian_proxy(_uniform(g, 0.0, 0.0)) == 0.0
    assert laplacian_proxy(_uniform(g, 1.0, 0.0)) == pytest.approx(1.0)
    d = director_from_function(g, lambda x, y: (x, 0 * y))
    assert laplacian_proxy(d) > 1.0
