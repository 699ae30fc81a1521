import numpy as np
import pytest

from kds_lab import geometry, tensors
from kds_lab.errors import (InvalidParameter, SpinTooLarge, StencilOutOfDomain,
                            SubextremalityViolated)

from conftest import random_points

LAM, M = 3.0, 0.1


def quartic_roots(lam, mass, a):
    # companion-matrix oracle for Delta = (r^2 + a^2)(1 - lam r^2 / 3) - 2 M r
    return np.sort(np.roots([-lam / 3.0, 0.0, 1.0 - lam * a * a / 3.0, -2.0 * mass,
                             a * a]).real)


class TestParams:
    def test_valid(self):
        p = geometry.validate_params(LAM, M, 0.005)
        assert p.spin == 0.005 and p.lambda_b == pytest.approx(LAM * 0.005 ** 2 / 3)

    def test_subextremality(self):
        with pytest.raises(SubextremalityViolated):
            geometry.validate_params(1.0, 1.0 / 3.0)

    def test_spin_cap(self):
        with pytest.raises(SpinTooLarge):
            geometry.validate_params(LAM, M, 0.02)

    @pytest.mark.parametrize("lam,mass,spin", [(0.0, 0.1, 0.0), (3.0, -0.1, 0.0),
                                               (3.0, 0.1, -1e-3)])
    def test_invalid(self, lam, mass, spin):
        with pytest.raises(InvalidParameter):
            geometry.validate_params(lam, mass, spin)


class TestHorizons:
    @pytest.mark.parametrize("a", [0.0, 1e-4, 5e-3])
    def test_against_companion_roots(self, a):
        p = geometry.validate_params(LAM, M, a)
        hz = geometry.horizon_radii(p)
        ref = quartic_roots(LAM, M, a)
        assert hz.r_event == pytest.approx(ref[-2], abs=1e-12)
        assert hz.r_cosmo == pytest.approx(ref[-1], abs=1e-12)
        assert abs(p.delta(hz.r_event)) < 1e-12 and abs(p.delta(hz.r_cosmo)) < 1e-12

    def test_frozen_sds(self):
        hz = geometry.horizon_radii(geometry.validate_params(LAM, M))
        assert hz.r_event == pytest.approx(0.2091488484413166, abs=1e-13)
        assert hz.r_cosmo == pytest.approx(0.8788850662499729, abs=1e-13)
        assert hz.epsilon_ext == pytest.approx(0.05 * (hz.r_cosmo - hz.r_event))

    def test_de_sitter(self):
        hz = geometry.horizon_radii(geometry.validate_params(LAM, 0.0))
        assert hz.r_event == 0.0
        assert hz.r_cosmo == pytest.approx(1.0, abs=1e-13)

    def test_extension_sign(self):
        p = geometry.validate_params(LAM, M)
        hz = geometry.horizon_radii(p)
        assert p.delta(hz.r_inner_cap) < 0 < p.delta(0.5) and p.delta(hz.r_outer_cap) < 0


class TestMetric:
    def test_bl_sds_values(self):
        p = geometry.validate_params(LAM, M)
        g = geometry.metric_bl(p, r=0.5, theta=1.0).g
        mu = 1 - 2 * M / 0.5 - LAM * 0.25 / 3
        assert mu == pytest.approx(0.35)
        assert g[0, 0] == pytest.approx(-0.35, abs=1e-14)
        assert g[1, 1] == pytest.approx(1 / 0.35, abs=1e-13)
        assert g[3, 3] == pytest.approx(0.25 * np.sin(1.0) ** 2, abs=1e-14)

    def test_kerr_star_equals_bl_on_middle_interval(self, kds):
        r1, r2 = kds.profile.middle_interval
        r = np.linspace(r1, r2, 7)
        th = np.full_like(r, 0.9)
        ks = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th)
        bl = geometry.metric_bl(kds.params, r=r, theta=th)
        assert np.max(np.abs(ks.g - bl.g)) < 1e-13

    def test_inverse_and_signature(self, kds, rng):
        r, th = random_points(kds, 200, rng, margin=0.05)
        jet = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th, second=True)
        assert geometry.inverse_residual(jet) < 1e-12
        assert geometry.signature_ok(jet.g)
        assert np.all(jet.g_inv[..., 0, 0] < 0)

    def test_analytic_partials_match_differences(self, kds, rng):
        r, th = random_points(kds, 20, rng)
        h = 1e-4
        jet = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th, second=True)

        def dg(rr, tt):
            return geometry.metric_kerr_star(kds.params, kds.profile, r=rr, theta=tt).dg

        fd_r = (dg(r + h, th) - dg(r - h, th)) / (2 * h)
        fd_t = (dg(r, th + h) - dg(r, th - h)) / (2 * h)
        assert np.max(np.abs(jet.d2g[..., 1, :, :, :] - fd_r)) < 1e-5 * np.max(np.abs(fd_r))
        assert np.max(np.abs(jet.d2g[..., 2, :, :, :] - fd_t)) < 1e-5 * max(1, np.max(np.abs(fd_t)))

    def test_regular_across_horizons(self, sds):
        hz = sds.horizons
        r = np.array([hz.r_event, hz.r_cosmo])
        jet = geometry.metric_kerr_star(sds.params, sds.profile, r=r, theta=np.full(2, 1.2))
        assert np.all(np.isfinite(jet.g)) and np.all(np.isfinite(jet.dg))
        assert np.all(jet.g_inv[..., 0, 0] < 0)

    def test_outside_extended_region(self, sds):
        with pytest.raises(Exception):
            geometry.metric_kerr_star(sds.params, sds.profile,
                                      r=np.array([sds.horizons.r_outer_cap + 0.1]),
                                      theta=np.array([1.0]))

    def test_ergosphere_sign(self, sds):
        hz = sds.horizons
        vals = geometry.ergosphere_indicator(sds.params, sds.profile,
                                             r=np.array([hz.r_inner_cap, 0.5, hz.r_outer_cap]),
                                             theta=np.full(3, 1.0))
        assert vals[0] > 0 and vals[1] < 0 and vals[2] > 0


class TestProfile:
    def test_smoothstep(self):
        x = np.linspace(-0.5, 1.5, 201)
        s = geometry.smoothstep(x)
        assert np.all(s[x <= 0] == 0) and np.all(s[x >= 1] == 1)
        assert geometry.smoothstep(np.array([0.5]))[0] == pytest.approx(0.5)
        assert np.all(np.diff(s) >= 0)

    def test_smoothstep_derivatives_vanish_at_ends(self):
        c = np.poly1d(geometry.smoothstep_coefficients(5))
        for k in range(1, 6):
            d = c.deriv(k)
            assert abs(d(0.0)) < 1e-9 and abs(d(1.0)) < 1e-9

    def test_switch_values(self, sds):
        prof = sds.profile
        r1, r2 = prof.middle_interval
        assert prof.s(np.array([0.5 * (r1 + r2)]))[0] == 0
        assert prof.s(np.array([sds.horizons.r_event]))[0] == -1
        assert prof.s(np.array([sds.horizons.r_cosmo]))[0] == 1

    def test_F_vanishes_on_middle_interval(self, sds):
        r1, r2 = sds.profile.middle_interval
        assert np.max(np.abs(sds.profile.F(np.linspace(r1, r2, 51)))) < 1e-14


class TestCurvature:
    def test_christoffel_sds_hand_formulas(self):
        p = geometry.validate_params(LAM, M)
        r, th = 0.45, 1.1
        G = geometry.christoffel(p, None, chart=geometry.BOYER_LINDQUIST,
                                 r=np.array([r]), theta=np.array([th]))[0]
        mu = 1 - 2 * M / r - LAM * r * r / 3
        dmu = 2 * M / r ** 2 - 2 * LAM * r / 3
        assert G[1, 0, 0] == pytest.approx(0.5 * mu * dmu, rel=1e-12)
        assert G[0, 0, 1] == pytest.approx(0.5 * dmu / mu, rel=1e-12)
        assert G[1, 1, 1] == pytest.approx(-0.5 * dmu / mu, rel=1e-12)
        assert G[2, 1, 2] == pytest.approx(1 / r, rel=1e-12)
        assert G[1, 2, 2] == pytest.approx(-r * mu, rel=1e-12)
        assert G[3, 2, 3] == pytest.approx(np.cos(th) / np.sin(th), rel=1e-12)

    def test_metric_compatibility(self, kds, rng):
        r, th = random_points(kds, 50, rng)
        jet = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th)
        assert tensors.metric_compatibility_residual(jet) < 1e-12

    def test_de_sitter_einstein(self):
        p = geometry.validate_params(LAM, 0.0)
        r, th = np.array([0.3, 0.6]), np.array([0.8, 1.9])
        jet = geometry.metric_bl(p, r=r, theta=th, second=True)
        ric = tensors.ricci_from_jet(jet)
        # module convention: Ric = -Lambda g on de Sitter
        assert np.max(np.abs(ric + LAM * jet.g)) < 1e-11

    def test_analytic_jet_solves_einstein(self, kds, rng):
        r, th = random_points(kds, 40, rng)
        jet = geometry.metric_kerr_star(kds.params, kds.profile, r=r, theta=th, second=True)
        assert np.max(np.abs(tensors.ricci_from_jet(jet) + LAM * jet.g)) < 1e-9

    def test_stencil_residual_converges(self, sds):
        hz = sds.horizons
        r, th = np.array([0.4, 0.7]), np.array([1.0, 2.0])
        res = [np.max(geometry.einstein_residual(sds.params, sds.profile, r=r, theta=th,
                                                 spacing=h)) for h in (4e-3, 2e-3)]
        assert res[1] < res[0] / 10

    def test_stencil_out_of_domain(self, sds):
        with pytest.raises(StencilOutOfDomain):
            geometry.ricci(sds.params, sds.profile, r=np.array([0.5]), theta=np.array([1e-3]))

    def test_killing_fields(self, kds, rng):
        r, th = random_points(kds, 50, rng)
        for X in (geometry.killing_T(), geometry.killing_Phi()):
            pi = geometry.lie_derivative_metric(kds.params, kds.profile, X, r=r, theta=th)
            assert np.max(np.abs(pi)) < 1e-12

    def test_radial_field_is_not_killing(self, sds):
        X = geometry.coordinate_field(1)
        pi = geometry.lie_derivative_metric(sds.params, sds.profile, X, r=np.array([0.5]),
                                            theta=np.array([1.0]))
        jet = geometry.metric_kerr_star(sds.params, sds.profile, r=np.array([0.5]),
                                        theta=np.array([1.0]))
        np.testing.assert_allclose(pi, jet.dg[:, 1], atol=1e-14)
