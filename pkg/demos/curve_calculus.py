"""Tangential calculus on closed curves.

Curvature as the surface divergence of the normal, the divergence theorem for
tangential fields, integration by parts with and without the curvature term,
and the projection identity under refinement for central differences.
"""

import numpy as np

from anisokin.surface import ParametricCurve, curvature, observed_orders, projection_residual, surface_check

if __name__ == "__main__":
    for curve in ("circle", "ellipse"):
        print(f"\n{curve}, spectral differentiation")
        for name, m, val in surface_check(curve, 256):
            print(f"  {name:28s} m={m:4d}  {val:.3e}")

    print("\nprojection identity for F = x^2 + y on the ellipse")
    F = lambda x, y: x**2 + y
    dF = lambda x, y: (2 * x, np.ones_like(y))
    sizes = (16, 32, 64, 128, 256)
    for method in ("fd2", "fd4"):
        errs = [projection_residual(ParametricCurve.ellipse(m, method=method), F, dF) for m in sizes]
        orders = observed_orders(sizes, errs)
        print(f"  {method}: " + "  ".join(f"{e:.1e}" for e in errs) + "   orders " +
              " ".join(f"{o:.2f}" for o in orders))

    warped = ParametricCurve.circle(256, radius=2.0, method="spectral", warp=0.4)
    print(f"\nradius-2 circle, uneven parametrization: curvature in "
          f"[{curvature(warped).values.min():.12f}, {curvature(warped).values.max():.12f}]")
