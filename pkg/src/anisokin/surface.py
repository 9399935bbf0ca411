"""Tangential calculus on closed parametric curves sampled at θ_k = 2πk/m.

Derivatives in θ are periodic: fourth-order central differences by default,
or FFT differentiation with ``method="spectral"``.  The tangent is obtained by
differentiating the sampled positions with the same rule, so every geometric
quantity is consistent with the derivative in use.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

METHODS = ("fd4", "spectral")


def periodic_derivative(f, method="fd4"):
    """d/dθ along axis 0 of samples on the uniform periodic grid θ_k = 2πk/m."""
    f = np.asarray(f, float)
    m = f.shape[0]
    h = 2 * np.pi / m
    if method == "fd4":
        return (8 * (np.roll(f, -1, 0) - np.roll(f, 1, 0)) - (np.roll(f, -2, 0) - np.roll(f, 2, 0))) / (12 * h)
    if method == "fd2":
        return (np.roll(f, -1, 0) - np.roll(f, 1, 0)) / (2 * h)
    if method == "spectral":
        k = np.fft.rfftfreq(m, 1.0 / m)
        if m % 2 == 0:
            k[-1] = 0.0
        shape = (-1,) + (1,) * (f.ndim - 1)
        return np.fft.irfft(1j * k.reshape(shape) * np.fft.rfft(f, axis=0), n=m, axis=0)
    raise ParameterError(f"unknown differentiation method {method!r}")


class ParametricCurve:
    """Counter-clockwise closed curve given by m position samples."""

    def __init__(self, points, method="fd4"):
        points = np.asarray(points, float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ParameterError("points must have shape (m, 2)")
        self.m = points.shape[0]
        if self.m < 8:
            raise ParameterError("need at least 8 samples")
        if method not in METHODS + ("fd2",):
            raise ParameterError(f"unknown differentiation method {method!r}")
        self.method = method
        self.theta = 2 * np.pi * np.arange(self.m) / self.m
        self.points = points
        self.tangent = self.d(points)
        self.metric = np.sum(self.tangent**2, axis=1)
        if np.any(self.metric <= 0):
            raise ParameterError("parametrization is not an immersion")
        self.speed = np.sqrt(self.metric)
        self.normal = np.column_stack([self.tangent[:, 1], -self.tangent[:, 0]]) / self.speed[:, None]

    @classmethod
    def from_function(cls, fn, m, method="fd4"):
        theta = 2 * np.pi * np.arange(m) / m
        x, y = fn(theta)
        return cls(np.column_stack([x, y]), method)

    @classmethod
    def circle(cls, m, radius=1.0, method="fd4", warp=0.0):
        """Circle of given radius; ``warp`` reparametrizes by θ + warp·sin θ."""
        return cls.from_function(lambda t: (radius * np.cos(t + warp * np.sin(t)),
                                            radius * np.sin(t + warp * np.sin(t))), m, method)

    @classmethod
    def ellipse(cls, m, a=2.0, b=1.0, method="fd4"):
        return cls.from_function(lambda t: (a * np.cos(t), b * np.sin(t)), m, method)

    def d(self, f):
        return periodic_derivative(f, self.method)

    def integrate(self, values):
        """Trapezoid rule ∫ f dσ = Σ f |τ| Δθ (spectrally accurate for periodic data)."""
        values = np.asarray(values, float)
        w = self.speed * (2 * np.pi / self.m)
        return np.tensordot(w, values, axes=(0, 0))

    def field(self, values):
        return SurfaceField(self, values)

    def tangential_part(self, vec):
        vec = np.asarray(vec, float)
        return vec - np.sum(vec * self.normal, axis=1)[:, None] * self.normal


@dataclass
class SurfaceField:
    curve: ParametricCurve
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, float)
        if self.values.shape[0] != self.curve.m:
            raise ParameterError("one value per sample expected")
        if not np.isfinite(self.values).all():
            raise ParameterError("surface field has non-finite values")

    @property
    def rank(self):
        return self.values.ndim - 1


def _values(f):
    return (f.curve, f.values) if isinstance(f, SurfaceField) else (None, np.asarray(f, float))


def surface_gradient(f, curve=None):
    """∇_Γ f = g⁻¹ (∂θ f) τ for scalar samples."""
    c, vals = _values(f)
    curve = c or curve
    df = curve.d(vals)
    return SurfaceField(curve, (df / curve.metric)[:, None] * curve.tangent)


def surface_jacobian(v, curve=None):
    """Rows are the surface gradients of the components: J[k, i, :] = ∇_Γ v_i."""
    c, vals = _values(v)
    curve = c or curve
    dv = curve.d(vals)
    return SurfaceField(curve, (dv / curve.metric[:, None])[:, :, None] * curve.tangent[:, None, :])


def surface_divergence(v, curve=None):
    """∇_Γ·v = g⁻¹ (∂θ v)·τ; for a matrix field the divergence is taken row by row."""
    c, vals = _values(v)
    curve = c or curve
    dv = curve.d(vals)
    if vals.ndim == 2:
        out = np.einsum("ki,ki->k", dv, curve.tangent)
    elif vals.ndim == 3:
        out = np.einsum("kij,kj->ki", dv, curve.tangent)
    else:
        raise ParameterError("surface divergence needs a vector or matrix field")
    inv_g = 1.0 / curve.metric
    return SurfaceField(curve, out * (inv_g if out.ndim == 1 else inv_g[:, None]))


def curvature(curve):
    """∇_Γ·n, positive on convex counter-clockwise curves."""
    return surface_divergence(curve.normal, curve)


def ibp_residual(f, v, curve=None, drop_curvature=False):
    """Quadrature value of ∫_Γ f ∇_Γ·v − f (v·n) ∇_Γ·n + v·∇_Γ f dσ (zero for exact calculus)."""
    c, fv = _values(f)
    _, vv = _values(v)
    curve = c or curve
    div = surface_divergence(vv, curve).values
    grad = surface_gradient(fv, curve).values
    integrand = fv * div + np.sum(vv * grad, axis=1)
    if not drop_curvature:
        integrand -= fv * np.sum(vv * curve.normal, axis=1) * curvature(curve).values
    return float(curve.integrate(integrand))


def projection_residual(curve, F, grad_F):
    """max |∇_Γ(F|_Γ) − (∇F − (∇F·n)n)| for a bulk function F with known gradient."""
    x, y = curve.points.T
    lhs = surface_gradient(F(x, y), curve).values
    rhs = curve.tangential_part(np.column_stack(grad_F(x, y)))
    return float(np.max(np.abs(lhs - rhs)))


def observed_orders(sizes, errors):
    sizes = np.asarray(sizes, float)
    errors = np.asarray(errors, float)
    return np.log(errors[:-1] / errors[1:]) / np.log(sizes[1:] / sizes[:-1])


def _smooth_f(x, y):
    return np.exp(0.3 * x) * np.sin(y + 0.5) + np.cos(0.7 * x * y)


def _smooth_v(x, y):
    return np.column_stack([np.sin(y) + 0.4 * x * x, np.cos(x) - 0.3 * x * y])


def surface_check(curve="circle", samples=256, method="spectral"):
    """Residual table (list of (check, m, value)) used by the command line front end."""
    def make(m, meth):
        if curve == "circle":
            return ParametricCurve.circle(m, method=meth)
        if curve == "ellipse":
            return ParametricCurve.ellipse(m, method=meth)
        raise ParameterError(f"unknown curve {curve!r}")

    c = make(samples, method)
    x, y = c.points.T
    rows = []
    kap = curvature(c).values
    if curve == "circle":
        rows.append(("curvature_error", samples, float(np.max(np.abs(kap - 1.0)))))
    else:
        a, b = 2.0, 1.0
        exact = a * b / (a**2 * np.sin(c.theta) ** 2 + b**2 * np.cos(c.theta) ** 2) ** 1.5
        rows.append(("curvature_error", samples, float(np.max(np.abs(kap - exact)))))
    h = 1.0 + 0.5 * np.sin(2 * c.theta) + 0.2 * np.cos(5 * c.theta)
    tang = h[:, None] * c.tangent / c.speed[:, None]
    rows.append(("divergence_theorem", samples, abs(float(c.integrate(surface_divergence(tang, c).values)))))
    f = _smooth_f(x, y)
    v = _smooth_v(x, y)
    rows.append(("ibp", samples, abs(ibp_residual(f, v, c))))
    rows.append(("ibp_without_curvature", samples, abs(ibp_residual(f, v, c, drop_curvature=True))))
    normal_dot = np.max(np.abs(np.sum(surface_gradient(f, c).values * c.normal, axis=1)))
    rows.append(("gradient_normal_component", samples, float(normal_dot)))
    F = lambda x, y: x**2 + y
    dF = lambda x, y: (2 * x, np.ones_like(y))
    for m in (samples // 4, samples // 2, samples):
        rows.append(("projection_identity_fd4", m, projection_residual(make(m, "fd4"), F, dF)))
    return rows
