import numpy as np
import pytest
from dataclasses import replace

from chtumor.basis import Grid, SpectralField, norms
from chtumor.dynamics import SchemeConfig, SimState, noisy_state
from chtumor.experiments import (
    attractor_probe,
    continuous_dependence_experiment,
    embed_coeffs,
    modes_refinement,
    perturbation_direction,
    tau_refinement,
)
from chtumor.potentials import double_well, quadratic
from chtumor.proliferation import truncated_quadratic, zero


def _scheme(**kw):
    base = dict(potential=double_well(), prolif=truncated_quadratic(),
                dt=5e-4, t_end=0.01, tol_n=1e-11)
    base.update(kw)
    return SchemeConfig(**base)


def test_perturbation_direction_unit_dual_norm_zero_mean():
    for g in (Grid((1.0,), (16,)), Grid((1.0, 2.0), (8, 8))):
        eta = perturbation_direction(g)
        n = norms(eta)
        assert n.v_dual == pytest.approx(1.0, rel=1e-12)
        assert n.mean == 0.0


def test_continuous_dependence_zero_delta_degenerate():
    g = Grid((1.0,), (16,))
    st = noisy_state(g, 0.0, 0.02, seed=5, psi_value=0.1)
    with pytest.raises(ValueError):
        continuous_dependence_experiment(st, _scheme(), deltas=(0.0,))


def test_continuous_dependence_requires_p1():
    g = Grid((1.0,), (16,))
    st = noisy_state(g, 0.0, 0.02, seed=5, psi_value=0.1)
    pf = replace(truncated_quadratic(), lipschitz_flag=False, q=5.0)
    with pytest.raises(ValueError):
        continuous_dependence_experiment(st, _scheme(prolif=pf), deltas=(1e-3,))


def test_continuous_dependence_ladder_consistency():
    g = Grid((1.0,), (32,))
    st = noisy_state(g, 0.0, 0.05, seed=5, psi_value=0.1)
    rep = continuous_dependence_experiment(st, _scheme(), deltas=(1e-3, 5e-4))
    assert rep.passed
    for _, _, ratio in rep.pairwise:
        assert 0.8 <= ratio <= 1.25
    # R starts at 1 (dual distance = delta, no accumulation yet)
    for d in rep.deltas:
        assert rep.ratios[d][0] == pytest.approx(1.0, rel=1e-12)


def test_continuous_dependence_convex_decoupled_contraction():
    g = Grid((1.0,), (32,))
    st = noisy_state(g, 0.0, 0.05, seed=5, psi_value=0.0)
    cfg = _scheme(potential=quadratic(1.0), prolif=zero(), dt=5e-4, t_end=0.05)
    rep = continuous_dependence_experiment(st, cfg, deltas=(1e-3,))
    assert rep.r_final[1e-3] <= 1.05


def test_attractor_probe_equilibrium_is_constant():
    g = Grid((1.0,), (16,))
    # phi0 = 1, psi0 = 0 is an exact equilibrium: amplitude fitting from 0 noise
    rep = attractor_probe(
        g, _scheme(dt=1e-2), ensemble=1, energy_bound=2.0, transient=0.0, horizon=0.1,
        phi_mean=1.0, psi_value=0.0, noise_amp=0.0, seed=1, sample_stride=1,
    )
    tr = rep.trajectories[0]
    energies = [row[1] for row in tr.series]
    assert max(energies) - min(energies) < 1e-12
    assert rep.passed


def test_attractor_probe_respects_energy_bound():
    g = Grid((1.0,), (32,))
    rep = attractor_probe(
        g, _scheme(dt=1e-2), ensemble=3, energy_bound=0.5, transient=0.1, horizon=0.5,
        phi_mean=0.0, psi_value=0.1, noise_amp=0.5, seed=3, sample_stride=2,
    )
    for tr in rep.trajectories:
        assert tr.energy_initial <= 0.5 + 1e-9
        assert tr.energy_at_transient <= tr.energy_initial + 1e-10
    assert rep.energy_decayed


def test_attractor_probe_rejects_infeasible_bound():
    g = Grid((1.0,), (16,))
    # double-well mean-zero state has E >= 0.25 |Omega| = 0.25
    with pytest.raises(ValueError):
        attractor_probe(g, _scheme(), ensemble=1, energy_bound=0.01, transient=0.0,
                        horizon=0.1, phi_mean=0.0, psi_value=0.0, noise_amp=0.1, seed=1)


def test_tau_refinement_first_order():
    g = Grid((1.0,), (32,))
    st = noisy_state(g, 0.0, 0.05, seed=7, psi_value=0.1)
    rep = tau_refinement(st, _scheme(), taus=(4e-4, 2e-4), t_end=0.01, ref_factor=16)
    assert len(rep.rows) == 2
    assert rep.rows[0].err_phi > rep.rows[1].err_phi
    assert 2.0 ** rep.orders[0] == pytest.approx(2.0, abs=0.3)


def test_temporal_order_at_benchmark_horizon():
    # global error at T = 0.1 vs a tau/16 reference contracts 2.0 +- 0.3 per halving
    g = Grid((1.0,), (64,))
    st = noisy_state(g, 0.0, 0.05, seed=12346, psi_value=0.1)
    rep = tau_refinement(st, _scheme(dt=1e-4), taus=(4e-4, 2e-4, 1e-4), t_end=0.1,
                         ref_factor=16)
    for order in rep.orders:
        assert 1.7 <= 2.0 ** order <= 2.3


def test_zero_perturbation_gives_identical_trajectory():
    # the delta = 0 degenerate case: determinism forces identically zero distance
    from chtumor.dynamics import final_state
    from chtumor.diagnostics import dual_distance
    g = Grid((1.0,), (32,))
    st = noisy_state(g, 0.0, 0.05, seed=5, psi_value=0.1)
    cfg = _scheme(t_end=0.01)
    a, _ = final_state(st, cfg)
    b, _ = final_state(st, cfg)
    d = dual_distance(a, b)
    assert d.phi_dual == 0.0 and d.psi_dual == 0.0


def test_embed_coeffs_nested():
    g8, g16 = Grid((1.0,), (8,)), Grid((1.0,), (16,))
    c = np.arange(8.0)
    up = embed_coeffs(c, g8, g16)
    assert np.all(up[:8] == c) and np.all(up[8:] == 0.0)
    down = embed_coeffs(up, g16, g8)
    assert np.all(down == c)
    with pytest.raises(ValueError):
        embed_coeffs(c, g8, Grid((2.0,), (16,)))


def test_modes_refinement_spectral_decay():
    g = Grid((1.0,), (16,))
    coeffs = np.zeros(16)
    coeffs[1], coeffs[2] = 0.2, 0.1  # smooth band-limited start
    psi = np.zeros(16)
    psi[0] = 0.1
    st = SimState(SpectralField(g, coeffs), SpectralField(g, psi), 0.0)
    rep = modes_refinement(st, _scheme(dt=1e-3), modes_list=(16, 32), ref_modes=64,
                           t_end=0.01)
    errs = [r.err_phi for r in rep.rows]
    assert errs[1] < errs[0]
