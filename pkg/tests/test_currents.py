import numpy as np
import pytest

from kds_lab import currents, geometry, scenarios
from kds_lab.errors import InvalidParameter, TimelikenessLost
from kds_lab.evolution import solver

from conftest import random_points


@pytest.fixture(scope="module")
def short_run(sds):
    c = solver.courant_dt(sds.grid, sds.background, 0.25)
    res = solver.evolve(scenarios.scalar_pulse(sds), solver.EvolutionConfig(t_end=0.3),
                        sds.background, dt=c)
    return res


def test_killing_deformation_both_realizations(kds, rng):
    r, th = random_points(kds, 30, rng)
    jet = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th)
    X = np.zeros(r.shape + (4,))
    X[..., 0] = 1.0
    dX = np.zeros(r.shape + (4, 4))
    for real in ("covariant", "lie"):
        assert np.max(np.abs(currents.deformation_tensor(X, dX, jet, real))) < 1e-12


def test_deformation_realizations_agree_for_redshift(sds, rng):
    N = currents.redshift_multiplier_build(sds.params, sds.profile)
    r, th = random_points(sds, 30, rng)
    jet = geometry.metric_kerr_star(sds.params, sds.profile, r=r, theta=th)
    mv = N.evaluate(r, th, jet)
    a = currents.deformation_tensor(mv.X, mv.dX, jet, "covariant")
    b = currents.deformation_tensor(mv.X, mv.dX, jet, "lie")
    assert np.max(np.abs(a - b)) < 1e-11 * np.max(np.abs(a))


def test_energy_momentum_trace(kds, rng):
    # in four dimensions tr T = -|grad h|^2
    r, th = random_points(kds, 10, rng)
    jet = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th)
    grad = rng.standard_normal(r.shape + (4,)) + 1j * rng.standard_normal(r.shape + (4,))
    h = currents.FieldJet(np.ones(r.shape, complex), grad)
    T = currents.energy_momentum_tensor(h, jet)
    tr = np.einsum("nab,nab->n", jet.g_inv, T)
    np.testing.assert_allclose(tr, -currents.gradient_square(h, jet.g_inv), rtol=1e-12)


def test_energy_scales_quadratically(sds):
    N = currents.redshift_multiplier_build(sds.params, sds.profile)
    s = scenarios.scalar_pulse(sds)
    e1 = currents.slice_energy(N, s, sds.background)
    e2 = currents.slice_energy(N, solver.StateVector(2 * s.u, 2 * s.v), sds.background)
    assert e1 > 0 and e2 == pytest.approx(4 * e1, rel=1e-13)


def test_redshift_timelike(sds):
    N = currents.redshift_multiplier_build(sds.params, sds.profile)
    assert N.delta > 0


def test_redshift_bad_interval(sds):
    with pytest.raises(InvalidParameter):
        currents.redshift_multiplier_build(sds.params, sds.profile, blend_interval=(0.3, 0.4))


def test_time_multiplier_not_timelike_beyond_horizons(sds):
    # T is spacelike past both horizons, so only N can be coercive on the extended slice
    with pytest.raises(TimelikenessLost):
        currents.redshift_multiplier_build(
            sds.params, sds.profile,
            blend_interval=(sds.horizons.r_inner_cap - 1.0, sds.horizons.r_outer_cap + 1.0))


def test_coercivity(sds):
    N = currents.redshift_multiplier_build(sds.params, sds.profile)
    rep = currents.coercivity_constants(N, sds.background, n_samples=16)
    assert 0 < rep.c <= rep.C and rep.ratio < 1e3


def test_divergence_identity_T(sds, short_run):
    T = currents.time_multiplier()
    bal = currents.divergence_residual(T, short_run.snapshots, sds.background)
    assert bal.residual < 1e-3
    assert bal.bulk == pytest.approx(0.0, abs=1e-12 * abs(bal.E1))


def test_divergence_identity_N(sds, short_run):
    N = currents.redshift_multiplier_build(sds.params, sds.profile)
    bal = currents.divergence_residual(N, short_run.snapshots, sds.background)
    assert bal.residual < 5e-2


def test_energy_series_rows(sds, short_run):
    mults = [currents.time_multiplier(), currents.redshift_multiplier_build(sds.params,
                                                                           sds.profile)]
    rows = currents.energy_series(mults, short_run.snapshots[::10], sds.background)
    assert rows[0].as_row(["T", "N"])[0] == 0.0
    assert len(rows) == len(short_run.snapshots[::10])


def test_gronwall():
    t = np.linspace(0, 1, 11)
    runs = [currents.GronwallRun(t, np.exp(0.5 * t), 1.0),
            currents.GronwallRun(t, 2 * np.exp(0.5 * t), 2.0)]
    rep = currents.gronwall_bound_check(runs, sigma=0.5)
    assert rep.constant == pytest.approx(1.0) and not rep.degraded
    empty = currents.gronwall_bound_check([currents.GronwallRun(t, 0 * t, 0.0)], 0.5)
    assert empty.unconstrained
