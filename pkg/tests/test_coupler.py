import numpy as np
import pytest

from anisokin.config import SimConfig
from anisokin.coupler import Simulation, _predict, coupled_step, kappa_sweep, run
from anisokin.errors import ConfigError, PicardError
from anisokin.nernst_planck import ChargePair
from anisokin.output import read_vtk_scalars
from anisokin.state import SimulationState


def small(**kw):
    base = dict(grid__nx=16, grid__ny=16, time__T=0.02, time__dt=2e-3, poisson__solver="direct")
    base.update(kw)
    return SimConfig().replace(**base)


def test_electroneutral_fixed_point_in_one_iteration():
    cfg = small(ic__charges="uniform", bc__xi__amplitude=0.0)
    sim = Simulation(cfg)
    s0 = sim.initial_state()
    s1, info = sim.picard_step(s0, 2e-3)
    assert info.iterations == 1
    assert np.abs(s1.charges.c_plus - s0.charges.c_plus).max() <= 1e-14
    assert np.all(s1.psi == 0) and s1.flow.v.max_abs() == 0


def test_null_config_runs_with_zero_residual():
    cfg = small(ic__charges="uniform", ic__background=0.0, bc__xi__amplitude=0.0)
    res = run(cfg, write=False)
    assert res.summary["steps"] == 10
    assert np.all(res.ledger.column("residual") == 0.0)
    s = res.state
    assert not s.charges.c_plus.any() and not s.psi.any() and s.flow.v.max_abs() == 0


def test_electroneutral_null_run_stays_quiet():
    res = run(small(ic__charges="uniform", bc__xi__amplitude=0.0, director__preset="quadrant"), write=False)
    assert res.state.flow.v.max_abs() <= 1e-12 and np.abs(res.state.psi).max() <= 1e-12


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = small(director__preset="vortex", bc__xi__waveform="sinusoid", bc__xi__frequency=5.0)
    run(cfg.replace(out__ledger=str(a)))
    run(cfg.replace(out__ledger=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_species_swap_with_negated_datum():
    cfg = small(director__preset="quadrant", ic__charges="separated_slabs")
    sim_a = Simulation(cfg)
    sim_b = Simulation(cfg.replace(bc__xi__amplitude=-1.0))
    a = sim_a.initial_state()
    b0 = sim_b.initial_state()
    b = SimulationState(0.0, b0.flow, a.charges.swapped(), -a.psi, -a.phi, b0.xi, b0.director, b0.poisson,
                        b0.constants)
    assert np.allclose(sim_b.potential(b.charges, b.xi)[1], -a.psi, atol=1e-12)
    for _ in range(5):
        a, _ = sim_a.picard_step(a, 2e-3)
        b, _ = sim_b.picard_step(b, 2e-3)
    assert np.abs(a.charges.c_plus - b.charges.c_minus).max() < 1e-9
    assert np.abs(a.psi + b.psi).max() < 1e-9
    assert (a.flow.v - b.flow.v).max_abs() < 1e-9


def test_picard_contracts():
    cfg = small(director__preset="vortex", bc__xi__waveform="sinusoid", bc__xi__frequency=5.0)
    sim = Simulation(cfg)
    s = sim.initial_state()
    for _ in range(5):
        s, info = sim.picard_step(s, 2e-3)
        assert info.iterations >= 2
        assert 0 <= info.max_factor < 1


def test_predictor_extrapolates():
    cfg = small()
    sim = Simulation(cfg)
    s0 = sim.initial_state()
    assert _predict(s0, 1e-3) is s0.charges
    s1, _ = sim.picard_step(s0, 2e-3)
    guess = _predict(s1, 1e-3)
    assert np.allclose(guess.c_plus, s1.charges.c_plus + 0.5 * (s1.charges.c_plus - s0.charges.c_plus))


def test_picard_failure_triggers_halving_then_error(tmp_path):
    cfg = small(picard__maxit=1, picard__tol=1e-15, picard__halvings=0)
    sim = Simulation(cfg)
    with pytest.raises(PicardError) as err:
        sim.picard_step(sim.initial_state(), 2e-3)
    assert err.value.iterations == 1
    dump = tmp_path / "last.npz"
    with pytest.raises(PicardError) as err:
        run(cfg.replace(out__dump=str(dump)))
    assert err.value.dump_path == str(dump)
    data = np.load(dump)
    assert float(data["t"]) == 0.0 and data["c_plus"].shape == (16, 16)


def test_halving_recovers_from_cfl_violation():
    cfg = small(director__preset="quadrant")
    sim = Simulation(cfg)
    s = sim.initial_state()
    s.flow.v.u[1:-1, :] = 10.0  # advective limit ≈ 0.9·h/10 ≈ 5.6e-3
    subs = sim.advance(s, 2e-2)
    assert len(subs) >= 2 and all(info.dt <= 1e-2 for _, info in subs)
    assert subs[-1][0].t == pytest.approx(2e-2)


def test_coupled_step_matches_simulation():
    cfg = small()
    sim = Simulation(cfg)
    s0 = sim.initial_state()
    a = coupled_step(s0, cfg, sim=sim)
    b = coupled_step(s0, cfg)
    assert a.t == pytest.approx(2e-3)
    assert np.allclose(a.charges.c_plus, b.charges.c_plus, atol=1e-12)


def test_outputs_written(tmp_path):
    cfg = small(out__ledger=str(tmp_path / "run.csv"), out__summary=str(tmp_path / "sum.json"),
                out__vtk_dir=str(tmp_path / "vtk"), out__vtk_every=5)
    res = run(cfg)
    assert sorted(res.files) == ["diagnostics", "ledger", "summary", "vtk"]
    assert len(res.files["vtk"]) == 3
    fields = read_vtk_scalars(res.files["vtk"][-1])
    assert np.allclose(fields["c_plus"], res.state.charges.c_plus, rtol=1e-15)
    assert np.allclose(fields["psi"], res.state.psi, rtol=1e-15)
    header = (tmp_path / "run_diagnostics.csv").read_text().splitlines()[0]
    assert header.startswith("t,dt,picard_iterations")
    s = res.summary
    assert s["mass_drift"] <= 1e-12 and s["min_c"] >= 0.0


def test_kappa_limit_of_single_step():
    cfg = small(director__preset="zero")
    out = {}
    for k in (0.0, 1e-2, 1e-3, 1e-4):
        sim = Simulation(cfg.replace(reg__kappa=k))
        out[k] = coupled_step(sim.initial_state(), cfg, sim=sim)
    d = {k: np.sqrt(np.sum((out[k].psi - out[0.0].psi) ** 2) / 256) for k in (1e-2, 1e-3, 1e-4)}
    assert d[1e-2] > d[1e-3] > d[1e-4]
    # O(κ): each decade of κ removes roughly a decade of distance
    assert d[1e-3] / d[1e-2] < 0.2 and d[1e-4] / d[1e-3] < 0.2


def test_kappa_sweep_small():
    cfg = small(time__T=0.01)
    rep = kappa_sweep(cfg, [0.0, 1e-2, 1e-3])
    assert rep.distances[0.0]["total"] == 0.0
    assert rep.monotone()
    assert 0.5 < rep.rate < 1.5


def test_sweep_gate_refusal_names_kappa():
    with pytest.raises(ConfigError, match="0.03125"):
        kappa_sweep(small(director__preset="zero", reg__c_gate=32.0), [1 / 32])
