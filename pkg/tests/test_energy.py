import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from anisokin.anisotropy import DirectorField, preset_director
from anisokin.energy import (EnergyLedger, audit_energy_inequality, audit_regularized_energy, boundary_work,
                             charge_dissipation, charge_dissipation_density, dissipation, energy, entropy,
                             entropy_density, gronwall_envelope, lambda_norm_sq, log_mean, residual_series)
from anisokin.errors import InvariantViolation, ParameterError
from anisokin.grid import Grid, MACField, sample
from anisokin.navier_stokes import FlowState
from anisokin.nernst_planck import ChargePair
from anisokin.poisson import assemble_anisotropic_robin, robin_resolvent_skappa
from anisokin.state import Constants, SimulationState


def make_state(grid, cp, cm, psi=None, xi=None, director=None, constants=None, t=0.0, phi=None):
    director = director or preset_director("zero", grid)
    constants = constants or Constants()
    op = assemble_anisotropic_robin(grid, director.permittivity(), constants.tau)
    psi = np.zeros(grid.shape) if psi is None else psi
    xi = np.zeros(grid.n_boundary) if xi is None else np.asarray(xi, float)
    phi = np.zeros(grid.shape) if phi is None else phi
    return SimulationState(t, FlowState.at_rest(grid), ChargePair(np.asarray(cp, float), np.asarray(cm, float)),
                           psi, phi, xi, director, op, constants)


def test_entropy_closed_form():
    g = Grid(8, 8)
    for cbar in (0.3, 1.0, 2.5):
        c = np.full(g.shape, cbar)
        e = energy(make_state(g, c, c))
        assert e["E"] == pytest.approx(2 * cbar * (math.log(cbar) + 1), rel=1e-14)
    c = np.ones(g.shape)
    assert energy(make_state(g, c, c))["E"] == pytest.approx(2.0, rel=1e-15)


def test_entropy_density_zero_convention_and_negative_rejection():
    assert np.array_equal(entropy_density(np.array([0.0, 1.0])), [0.0, 1.0])
    with pytest.raises(InvariantViolation):
        entropy_density(np.array([1.0, -1e-6]))


@given(st.integers(0, 2**31 - 1))
def test_entropy_lower_bound(seed):
    # c (ln c + 1) ≥ -e^{-2}, attained at c = e^{-2}
    g = Grid(5, 4)
    r = np.random.default_rng(seed)
    cp, cm = r.random(g.shape) * 3, r.random(g.shape) ** 3
    assert entropy(g, cp, cm) >= -2 * math.exp(-2) * g.area - 1e-15


def test_log_mean():
    assert log_mean(2.0, 2.0) == pytest.approx(2.0)
    assert log_mean(math.e, 1.0) == pytest.approx(math.e - 1)
    assert log_mean(0.0, 3.0) == 0.0
    assert log_mean(1.0 + 1e-10, 1.0) == pytest.approx(1.0 + 5e-11, rel=1e-15)


def test_dissipation_vanishes_for_constants_and_zero_charge(rng):
    g = Grid(8, 8)
    d = preset_director("vortex", g)
    c = np.full(g.shape, 0.7)
    assert dissipation(make_state(g, c, 2 * c, psi=np.full(g.shape, 3.0), director=d)) == 0.0
    zero = np.zeros(g.shape)
    assert charge_dissipation(make_state(g, zero, zero, psi=rng.standard_normal(g.shape), director=d)) == 0.0


def test_boltzmann_pair_dissipation():
    g = Grid(128, 128)
    psi = sample(g, lambda x, y: np.sin(3 * x) + 0.5 * np.cos(2 * y))
    for beta in (1.0, 0.6):
        k = Constants(beta=beta)
        st_ = make_state(g, 1.3 * np.exp(-beta * psi), 0.4 * np.exp(beta * psi), psi=psi, constants=k)
        assert charge_dissipation(st_) <= 1e-8


def test_pointwise_square_for_isotropic_mobility(rng):
    g = Grid(6, 7)
    ax, ay = rng.standard_normal((5, 7)), rng.standard_normal((6, 6))
    d = preset_director("zero", g)
    assert lambda_norm_sq(g, ax, ay, d.mobility()) == pytest.approx((np.sum(ax**2) + np.sum(ay**2)) * g.cell_area)


def test_lambda_norm_nonnegative_for_anisotropic_mobility(rng):
    g = Grid(10, 10)
    for name in ("vortex", "quadrant", "uniform_x_interior_masked"):
        lam = preset_director(name, g, lam=2.0).mobility()
        for _ in range(20):
            ax, ay = rng.standard_normal((9, 10)), rng.standard_normal((10, 9))
            assert lambda_norm_sq(g, ax, ay, lam) >= 0


def test_face_vector_matches_definition():
    g = Grid(4, 4)
    c = np.arange(1.0, 17.0).reshape(g.shape)
    psi = np.linspace(0, 1, 16).reshape(g.shape)
    ax, _ = charge_dissipation_density(g, c, -1, psi, None, beta=1.0)
    r = np.sqrt(c)
    expect = (2 * (r[1, 0] - r[0, 0]) - log_mean(r[0, 0], r[1, 0]) * (psi[1, 0] - psi[0, 0])) / g.hx
    assert ax[0, 0] == pytest.approx(expect, rel=1e-14)


def test_null_run_has_zero_residual():
    g = Grid(6, 6)
    zero = np.zeros(g.shape)
    led = EnergyLedger(Constants())
    for n in range(4):
        row = led.append(make_state(g, zero, zero, t=0.1 * n), work=0.0)
        assert row["residual"] == 0.0
    assert np.all(residual_series(led) == 0.0)


def test_running_residual_matches_recomputation(rng):
    g = Grid(8, 8)
    led = EnergyLedger(Constants(Re=2.0, beta=0.5))
    for n in range(5):
        st_ = make_state(g, 1 + rng.random(g.shape), 1 + rng.random(g.shape), psi=rng.standard_normal(g.shape),
                         constants=led.constants, t=0.01 * n)
        led.append(st_, work=rng.standard_normal())
    for i in range(5):
        assert led.rows[i]["residual"] == pytest.approx(audit_energy_inequality(led, i), abs=1e-12)


def test_ledger_rejects_non_increasing_time():
    g = Grid(4, 4)
    one = np.ones(g.shape)
    led = EnergyLedger()
    led.append(make_state(g, one, one, t=0.0))
    with pytest.raises(InvariantViolation):
        led.append(make_state(g, one, one, t=0.0))


def test_boundary_work_vanishes_for_static_datum(rng):
    g = Grid(6, 6)
    xi = rng.standard_normal(g.n_boundary)
    st_ = make_state(g, np.ones(g.shape), np.ones(g.shape), psi=rng.standard_normal(g.shape), xi=xi)
    assert boundary_work(st_, xi.copy(), 1e-3) == 0.0
    assert boundary_work(st_, xi + 1e-3, 1e-3) != 0.0


def test_kappa_term_spectral_identity():
    g = Grid(8, 8)
    d = preset_director("vortex", g)
    op = assemble_anisotropic_robin(g, d.permittivity(), 1.0)
    w, V = np.linalg.eigh(op.dense())
    e = V[:, 5].reshape(g.shape)
    kappa = 1e-2
    phi = robin_resolvent_skappa(op, e, np.zeros(g.shape), kappa, tol=1e-14)
    st_ = make_state(g, 1 + e, np.ones(g.shape), director=d, constants=Constants(kappa=kappa), phi=phi)
    expect = 0.5 * kappa * np.sum(e**2) * g.cell_area / (1 + kappa * w[5]) ** 2
    assert energy(st_)["kappa_term"] == pytest.approx(expect, rel=1e-10)
    assert audit_regularized_energy(st_) >= energy(st_)["E"]


def test_kappa_zero_gives_plain_energy(rng):
    g = Grid(6, 6)
    st_ = make_state(g, 1 + rng.random(g.shape), np.ones(g.shape), phi=rng.random(g.shape))
    e = energy(st_)
    assert e["E_reg"] == e["E"]


def test_weighted_energy_uses_constants():
    g = Grid(6, 6)
    st_ = make_state(g, np.ones(g.shape), np.ones(g.shape), constants=Constants(Re=3.0, alpha=2.0, beta=0.5))
    st_.flow.v.u[3, 3] = 1.0
    e = energy(st_)
    assert e["E"] == pytest.approx(0.5 * 3.0 / 2.0 * e["kinetic"] + e["entropy"] + 0.5 * (e["field"] + e["boundary"]))


def test_constants_validation():
    with pytest.raises(ParameterError):
        Constants(Pe=0.0)
    with pytest.raises(ParameterError):
        Constants(kappa=-1.0)


def test_csv_round_trip(tmp_path, rng):
    g = Grid(6, 6)
    led = EnergyLedger(Constants())
    for n in range(3):
        led.append(make_state(g, 1 + rng.random(g.shape), np.ones(g.shape), t=0.1 * n), work=0.25 * n)
    path = tmp_path / "ledger.csv"
    led.write_csv(path)
    back = EnergyLedger.read_csv(path)
    assert back.rows == led.rows
    bad = tmp_path / "bad.csv"
    bad.write_text("t,energy\n0,1\n")
    with pytest.raises(ValueError):
        EnergyLedger.read_csv(bad)


def test_gronwall_envelope_fit():
    t = np.linspace(0, 1, 101)
    e = np.exp(-t)
    C, crossings = gronwall_envelope(t, e, np.zeros_like(t), np.zeros_like(t))
    assert C == 0.0 and crossings == 0
    grow = 1 + 5 * t**3
    _, crossings = gronwall_envelope(t, grow, np.zeros_like(t), np.zeros_like(t))
    assert crossings > 0
