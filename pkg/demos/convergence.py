"""Manufactured-solution refinement for the Robin-Poisson and drift-diffusion operators.

Both use a smooth director that is tangential on the walls, so the tensor has
a genuine off-diagonal part in the interior.  Second order is expected.
"""

from anisokin.mms import np_mms, poisson_mms

SIZES = (16, 32, 64, 128)


def show(name, study):
    print(name)
    for n, err, order in study.rows():
        print(f"  n={n:4d}  L2 error {err:.3e}  order {order:.3f}")


if __name__ == "__main__":
    show("Robin-Poisson, strength 1", poisson_mms(SIZES))
    show("Robin-Poisson, strength 4, tau 5", poisson_mms(SIZES, strength=4.0, tau=5.0))
    show("Nernst-Planck step, cation", np_mms(SIZES, sign=1))
    show("Nernst-Planck step, anion", np_mms(SIZES, sign=-1))
