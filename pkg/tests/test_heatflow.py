import math

import numpy as np
import pytest

from adeform.errors import DomainError
from adeform.heatflow import (FlowRequest, ScalarField, build_rule,
                              composition_check, constant_field,
                              heat_equation_residual, heat_flow,
                              heat_flow_radial_batch, initial_condition_check,
                              max_principle_scan, monomial_field, radial_field,
                              weighted_integral, zonal_field)
from adeform.kernels import (DeformParams, PolarPoint, ZonalHarmonic,
                             heat_kernel, heat_kernel_pairs, moment_flow_f,
                             poly_flow)
from adeform.specfun import gamma_fn

from conftest import unit_x


class TestQuadratureRule:
    def test_weights_positive_and_moments_exact(self, params):
        rule = build_rule(params, 1.0)
        assert np.all(np.isfinite(rule.radial_logw))
        assert np.all(rule.ang_w > 0)
        assert rule.moment_defect() < 1e-12

    def test_rejects_unknown_kind(self, params13):
        with pytest.raises(DomainError):
            build_rule(params13, 1.0, kind="chebyshev")


class TestWeightedIntegral:
    def test_gaussian_total(self, params):
        rule = build_rule(params, 1.0)
        a = params.a
        f = radial_field(lambda s: np.exp(-s ** a / a))
        got = weighted_integral(params, f, rule)
        assert got == pytest.approx(1.0 / params.c_a, rel=1e-12)

    def test_first_moment(self, params):
        rule = build_rule(params, 1.0)
        a, lam = params.a, params.lambda_a
        f = radial_field(lambda s: np.exp(-s ** a / a) * s ** a)
        want = (a ** (lam + 1) * gamma_fn(lam + 2)
                * 2 * math.pi ** (params.N / 2) / gamma_fn(params.N / 2))
        assert weighted_integral(params, f, rule) == pytest.approx(want, rel=1e-12)

    def test_odd_component_vanishes(self, params13):
        rule = build_rule(params13, 1.0)
        f = zonal_field(lambda s, u: np.exp(-s) * s * u, axis=(1, 0, 0))
        assert abs(weighted_integral(params13, f, rule)) < 1e-14

    def test_convergence_check_passes(self, params13):
        rule = build_rule(params13, 1.0, n_rad=48)
        f = radial_field(lambda s: np.exp(-s ** 2 / 3.0))
        v = weighted_integral(params13, f, rule, check=True)
        assert np.isfinite(v)


class TestHeatFlowBasics:
    def test_total_mass(self, params):
        e1 = unit_x(params.N, 0.0)
        for t in (0.1, 1.0, 10.0):
            for xr in (0.0, 0.7, 2.0):
                x = unit_x(params.N, xr)
                v = heat_flow(FlowRequest(params, t, constant_field()), x)
                assert v == pytest.approx(1.0, abs=1e-9)

    def test_moment_identities(self, params):
        x = unit_x(params.N, 0.9)
        for m in (1, 2, 3, 4):
            v = heat_flow(FlowRequest(params, 0.7, monomial_field(params, m)), x)
            want = moment_flow_f(params, m, 0.7, 0.9 ** params.a)
            assert v == pytest.approx(want, rel=1e-8)

    def test_poly_flow_with_harmonic(self, params):
        # flows of |y|^{ma} p(y) against the closed form, p zonal harmonic
        p = params
        for l in (1, 2):
            h = ZonalHarmonic(p.N, l)
            fld = monomial_field(p, 1, axis=tuple(h.axis),
                                 harmonic_profile=h.profile, l=l)
            for xr in (0.0, 0.8):
                x = unit_x(p.N, xr)
                got = heat_flow(FlowRequest(p, 0.6, fld), x)
                want = poly_flow(p, 1, l, h, 0.6, x)
                assert got == pytest.approx(want, rel=1e-7, abs=1e-10)

    def test_off_axis_probe(self, params13):
        # probe direction off the field axis exercises the ring reduction
        p = params13
        fld = zonal_field(lambda s, u: np.cos(s * u), axis=(1, 0, 0))
        x = PolarPoint.from_cartesian(np.array([0.4, 0.5, 0.0]))
        v = heat_flow(FlowRequest(p, 0.5, fld), x)
        # brute force by full sphere cubature
        from adeform.quad import sphere_product_rule, gauss_genlaguerre
        pts, wq = sphere_product_rule(3, 24)
        xg, wg = gauss_genlaguerre(96, p.lambda_a)
        S = xg * 0.5
        s = (p.a * S) ** (1 / p.a)
        total = 0.0
        for si, Si, wgi in zip(s, S, wg):
            yv = si * pts
            hv = heat_kernel_pairs(p, np.full(pts.shape[0], x.r),
                                   np.full(pts.shape[0], si),
                                   (pts @ x.cartesian) / x.r, 0.5)
            fv = np.cos(yv[:, 0])
            total += 0.5 ** (p.lambda_a + 1) * wgi * math.exp(Si / 0.5) \
                * float(np.sum(wq * hv * fv)) * math.exp(-Si / 0.5)
        want = p.c_a * p.a ** p.lambda_a * total
        assert v == pytest.approx(want, rel=1e-9)

    def test_bounded_field_stays_bounded(self, params):
        fld = zonal_field(lambda s, u: np.sin(s * u),
                          axis=tuple(np.eye(params.N)[0]))
        x = unit_x(params.N, 0.6)
        v = heat_flow(FlowRequest(params, 0.8, fld), x)
        assert -1.0 <= v <= 1.0

    def test_monotonicity(self, params13):
        # u <= v pointwise implies flows ordered (kernel positivity)
        f1 = radial_field(lambda s: 1.0 / (1.0 + s ** 2))
        f2 = radial_field(lambda s: 1.0 / (1.0 + s ** 2) + 0.3 * np.exp(-s))
        x = unit_x(3, 0.5)
        for t in (0.2, 1.0):
            v1 = heat_flow(FlowRequest(params13, t, f1), x)
            v2 = heat_flow(FlowRequest(params13, t, f2), x)
            assert v1 < v2

    def test_growth_preservation(self, params13):
        # |u| <= C(1 + |y|^{ma}) gives |H_t u| <= C(1 + f_m(t, |x|^a))
        p = params13
        m, C = 2, 1.3
        fld = radial_field(lambda s: C * (1.0 + s ** (m * p.a)) * np.cos(s),
                           growth_m=m)
        for xr, t in ((0.4, 0.3), (1.5, 1.2)):
            x = unit_x(3, xr)
            v = heat_flow(FlowRequest(p, t, fld), x)
            bound = C * (1.0 + moment_flow_f(p, m, t, xr ** p.a))
            assert abs(v) <= bound + 1e-10

    def test_request_validation(self, params13):
        with pytest.raises(DomainError):
            FlowRequest(params13, 0.0, constant_field())
        with pytest.raises(DomainError):
            FlowRequest(params13, 1.0, ScalarField(lambda s, u: s,
                                                   growth_m=math.inf))

    def test_radial_batch_matches_pointwise(self, params13):
        fld = zonal_field(lambda s, u: np.exp(-s) * (1 + 0.3 * u), axis=(1, 0, 0))
        req = FlowRequest(params13, 0.7, fld)
        radii = np.array([0.0, 0.8, 1.6])
        ucos = np.array([-0.7, 0.1, 1.0])
        got = heat_flow_radial_batch(req, radii, ucos)
        for i, rr in enumerate(radii):
            for j, c in enumerate(ucos):
                y = np.array([rr * c, rr * math.sqrt(1 - c * c), 0.0])
                ref = heat_flow(req, PolarPoint.from_cartesian(y))
                assert got[i, j] == pytest.approx(ref, rel=1e-10, abs=1e-12)


class TestSmallTime:
    def test_initial_condition_moment_field(self, params):
        p = params
        x = unit_x(p.N, 1.0)
        rows, _ = initial_condition_check(
            FlowRequest(p, 1.0, monomial_field(p, 1)), x,
            [0.1, 0.01, 1e-3, 1e-4])
        for t, gap in rows:
            want = p.a * (p.lambda_a + 1) * t
            assert gap == pytest.approx(want, rel=2e-4)

    def test_initial_condition_bounded_field(self, params13):
        fld = zonal_field(lambda s, u: np.cos(s * u), axis=(1, 0, 0))
        x0 = PolarPoint.from_cartesian(np.zeros(3))
        rows, u0 = initial_condition_check(FlowRequest(params13, 1.0, fld),
                                           x0, [0.1, 0.01, 1e-3])
        gaps = [g for _, g in rows]
        assert u0 == pytest.approx(1.0)
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 5e-3


class TestPDE:
    def test_residual_radial_gaussian(self, params):
        fld = radial_field(lambda s: np.exp(-s ** 2 / 2.0))
        x = unit_x(params.N, 0.9)
        res, rel = heat_equation_residual(FlowRequest(params, 0.8, fld), x)
        assert rel < 1e-4

    def test_residual_moment_field_sharp(self, params13):
        # the flow of |y|^a is exactly linear in t
        fld = monomial_field(params13, 1)
        x = unit_x(3, 0.9)
        res, rel = heat_equation_residual(FlowRequest(params13, 0.8, fld), x)
        assert rel < 1e-6

    def test_residual_of_kernel_itself(self, params13):
        # u = h(., z; t0) flows to h(., z; t+t0): residual stays small
        p = params13
        z = unit_x(3, 1.1)

        def prof(s, u):
            s_b, u_b = np.broadcast_arrays(np.asarray(s, float),
                                           np.asarray(u, float))
            out = heat_kernel_pairs(p, np.full(s_b.size, z.r), s_b.ravel(),
                                    u_b.ravel(), 0.5)
            return out.reshape(s_b.shape)

        fld = zonal_field(prof, axis=z.omega)
        res, rel = heat_equation_residual(FlowRequest(p, 0.4, fld),
                                          unit_x(3, 0.8))
        assert rel < 1e-4

    def test_origin_rejected(self, params13):
        with pytest.raises(DomainError):
            heat_equation_residual(
                FlowRequest(params13, 0.5, constant_field()),
                PolarPoint.from_cartesian(np.zeros(3)))


class TestComposition:
    def test_constant_both_sides_one(self, params13):
        lhs, rhs, gap = composition_check(params13, 0.4, 0.6, constant_field(),
                                          PolarPoint.from_cartesian(np.zeros(3)))
        assert lhs == pytest.approx(1.0, abs=1e-10)
        assert rhs == pytest.approx(1.0, abs=1e-10)

    def test_kernel_form_origin(self, params):
        # c_a int h(0,y;t1) h(y,z;t2) = h(0,z;t1+t2) through the flow of
        # the kernel field
        p = params
        z = unit_x(p.N, 1.1)

        def prof(s, u):
            s_b, u_b = np.broadcast_arrays(np.asarray(s, float),
                                           np.asarray(u, float))
            out = heat_kernel_pairs(p, np.full(s_b.size, z.r), s_b.ravel(),
                                    u_b.ravel(), 0.6)
            return out.reshape(s_b.shape)

        fld = zonal_field(prof, axis=z.omega)
        x0 = PolarPoint.from_cartesian(np.zeros(p.N))
        got = heat_flow(FlowRequest(p, 0.4, fld), x0)
        want = heat_kernel(p, x0, z, 1.0)
        assert got == pytest.approx(want, rel=1e-8)

    def test_nested_quadrature_origin(self, params13):
        fld = zonal_field(lambda s, u: np.exp(-0.3 * s) * (1 + 0.2 * u),
                          axis=(0, 1, 0))
        lhs, rhs, gap = composition_check(params13, 0.4, 0.6, fld,
                                          PolarPoint.from_cartesian(np.zeros(3)))
        assert gap < 1e-8

    def test_nested_off_origin_interpolated(self, params13):
        fld = zonal_field(lambda s, u: np.exp(-0.3 * s) * (1 + 0.2 * u),
                          axis=(0, 1, 0))
        x = PolarPoint.from_cartesian(np.array([0.6, 0.3, 0.0]))
        lhs, rhs, gap = composition_check(params13, 0.4, 0.6, fld, x)
        assert gap < 1e-3


class TestMaxPrinciple:
    def test_smoothed_indicator(self, params):
        fld = radial_field(lambda s: 1.0 / (1.0 + np.exp((s - 1.0) / 0.05)))
        grid = [0.3 * np.eye(params.N)[0], 1.2 * np.eye(params.N)[0]]
        worst, sup_u = max_principle_scan(params, fld, [0.1, 1.0], grid)
        assert worst <= sup_u + 1e-8
        assert sup_u <= 1.0 + 1e-12

    def test_constant_equality(self, params13):
        worst, sup_u = max_principle_scan(params13, constant_field(),
                                          [0.5], [np.array([0.7, 0, 0])],
                                          sup_u=1.0)
        assert worst == pytest.approx(1.0, abs=1e-10)

    def test_sine_bounds(self, params13):
        fld = zonal_field(lambda s, u: np.sin(s * u), axis=(1, 0, 0))
        worst, sup_u = max_principle_scan(
            params13, fld, [0.2, 1.0],
            [np.array([0.5, 0, 0]), np.array([0.0, 1.4, 0.2])], sup_u=1.0)
        assert worst <= 1.0 + 1e-8
