import math

import numpy as np
import pytest

from adeform.errors import DomainError
from adeform.ikernel import itilde_stable
from adeform.kernels import (DeformParams, PolarPoint, ZonalHarmonic,
                             _heat_closed_complex_time, eigenfunction,
                             eigenfunction_norm_constant, eigenvalue,
                             fourier_kernel, heat_kernel, heat_kernel_grid,
                             heat_kernel_pairs, heat_kernel_spectral,
                             lambda_am, laguerre_semigroup_kernel,
                             moment_flow_f, moment_poly_coeffs, moment_poly_p,
                             poly_flow, radial_kernel, weber_integral_check)
from adeform.quad import sphere_volume
from adeform.specfun import gamma_fn

from conftest import unit_x


class TestDeformParams:
    def test_derived_constants(self):
        p = DeformParams(2.0, 3)
        assert p.lambda_a == 0.5
        assert p.nu == 0.5
        assert p.M == 2.5
        assert p.c_a == pytest.approx((2 * math.pi) ** -1.5, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            DeformParams(0.0, 3)
        with pytest.raises(DomainError):
            DeformParams(-1.0, 3)
        with pytest.raises(DomainError):
            DeformParams(2.0, 1)
        DeformParams(1.5, 2)   # a > 0 suffices for N = 2

    @pytest.mark.parametrize("a,N,m,want", [(2.0, 3, 0, 0.5), (1.0, 3, 2, 5.0),
                                            (2.0, 2, 0, 0.0)])
    def test_lambda_am(self, a, N, m, want):
        assert lambda_am(DeformParams(a, N), m) == want

    def test_polar_point(self):
        p = PolarPoint.from_cartesian([3.0, 4.0, 0.0])
        assert p.r == 5.0
        assert np.allclose(p.cartesian, [3, 4, 0])
        with pytest.raises(DomainError):
            PolarPoint(1.0, (0.5, 0.5, 0.5))
        with pytest.raises(DomainError):
            PolarPoint(-1.0, (1.0, 0.0, 0.0))


class TestFourierKernel:
    def test_classical_plane_wave(self):
        p = DeformParams(2.0, 3)
        x = PolarPoint.from_cartesian([1.0, 0, 0])
        y = PolarPoint.from_cartesian([0.5, 0, 0])
        assert fourier_kernel(p, x, y) == pytest.approx(np.exp(-0.5j), rel=1e-12)
        y2 = PolarPoint.from_cartesian([0.2, -0.4, 0.9])
        x2 = PolarPoint.from_cartesian([0.5, 1.0, -0.3])
        want = np.exp(-1j * np.dot(x2.cartesian, y2.cartesian))
        assert fourier_kernel(p, x2, y2) == pytest.approx(want, rel=1e-11)

    def test_origin_is_one(self, params):
        x = PolarPoint.from_cartesian(np.zeros(params.N))
        y = unit_x(params.N, 1.3)
        assert fourier_kernel(params, x, y) == 1.0 + 0j

    @pytest.mark.parametrize("N", [3, 4])
    def test_hankel_form(self, N):
        # a = 1 reduces to Gamma((N-1)/2) jtilde_{(N-3)/2} of
        # sqrt(2|x||y| + 2<x,y>); the normalized variant is forced by
        # continuity at the origin
        p = DeformParams(1.0, N)
        rng = np.random.default_rng(3)
        for _ in range(4):
            xv, yv = rng.normal(size=N), rng.normal(size=N)
            x, y = PolarPoint.from_cartesian(xv), PolarPoint.from_cartesian(yv)
            got = fourier_kernel(p, x, y)
            arg = math.sqrt(2 * x.r * y.r + 2 * float(np.dot(xv, yv)))
            want = gamma_fn((N - 1) / 2.0) * itilde_stable((N - 3) / 2.0,
                                                           np.array([1j * arg]))[0]
            assert abs(got - want) <= 1e-8 * abs(want)


class TestHeatKernel:
    def test_origin_closed_form(self, params):
        x0 = PolarPoint.from_cartesian(np.zeros(params.N))
        y = unit_x(params.N, 1.0)
        t = 1.0
        want = t ** (-(params.lambda_a + 1)) * math.exp(-1.0 / (params.a * t))
        assert heat_kernel(params, x0, y, t) == pytest.approx(want, rel=1e-13)

    def test_classical_gaussian(self):
        p = DeformParams(2.0, 3)
        rng = np.random.default_rng(11)
        for _ in range(6):
            xv, yv = rng.normal(size=3), rng.normal(size=3)
            t = rng.uniform(0.2, 2.0)
            got = heat_kernel(p, PolarPoint.from_cartesian(xv),
                              PolarPoint.from_cartesian(yv), t)
            want = t ** -1.5 * math.exp(-float(np.sum((xv - yv) ** 2)) / (2 * t))
            assert got == pytest.approx(want, rel=1e-11)

    def test_symmetry(self, params):
        rng = np.random.default_rng(7)
        for _ in range(4):
            xv = rng.normal(size=params.N)
            yv = rng.normal(size=params.N)
            t = rng.uniform(0.3, 1.5)
            x, y = PolarPoint.from_cartesian(xv), PolarPoint.from_cartesian(yv)
            assert heat_kernel(params, x, y, t) == pytest.approx(
                heat_kernel(params, y, x, t), rel=1e-12)

    def test_positive_time_required(self, params13):
        with pytest.raises(DomainError):
            heat_kernel(params13, unit_x(3), unit_x(3), 0.0)

    def test_grid_and_pairs_match_scalar(self, params13):
        s = np.array([0.3, 1.0, 2.5])
        u = np.array([-1.0, 0.2, 1.0])
        grid = heat_kernel_grid(params13, 0.8, s, u, 0.6)
        for i, si in enumerate(s):
            for j, uj in enumerate(u):
                y = PolarPoint(si, (uj, math.sqrt(1 - uj ** 2), 0.0))
                ref = heat_kernel(params13, unit_x(3, 0.8), y, 0.6)
                assert grid[i, j] == pytest.approx(ref, rel=1e-11)
        pv = heat_kernel_pairs(params13, np.full(3, 0.8), s, u, 0.6)
        assert pv == pytest.approx(grid[np.arange(3), np.arange(3)], rel=1e-11)

    def test_spectral_oracle(self):
        # the defining weighted-measure integral against the closed form
        p = DeformParams(1.0, 3)
        x = unit_x(3, 0.7)
        y = PolarPoint.from_cartesian([1.2 * 0.5, 1.2 * math.sqrt(0.75), 0.0])
        t = 0.8
        spec = heat_kernel_spectral(p, x, y, t)
        assert spec == pytest.approx(heat_kernel(p, x, y, t), rel=1e-8)

    def test_spectral_oracle_origin(self, params):
        x0 = PolarPoint.from_cartesian(np.zeros(params.N))
        y = unit_x(params.N, 0.9)
        spec = heat_kernel_spectral(params, x0, y, 0.7)
        assert spec == pytest.approx(heat_kernel(params, x0, y, 0.7), rel=1e-7)

    def test_spectral_rejects_small_time(self, params13):
        with pytest.raises(DomainError):
            heat_kernel_spectral(params13, unit_x(3), unit_x(3), 0.01)


class TestSemigroupKernel:
    def test_real_z_real_value(self, params13):
        val = laguerre_semigroup_kernel(params13, unit_x(3, 0.6),
                                        unit_x(3, 1.1), 0.7)
        assert abs(val.imag) < 1e-12 * abs(val.real)

    def test_two_routes_agree(self, params):
        x, y = unit_x(params.N, 0.8), unit_x(params.N, 1.2)
        for z in (0.5, 0.4 + 0.6j, 1.2 - 0.4j):
            direct = laguerre_semigroup_kernel(params, x, y, z)
            pre = np.exp(-(x.r ** params.a + y.r ** params.a) / params.a
                         * (1 / np.tanh(z) - 1 / np.sinh(z)))
            alt = pre * _heat_closed_complex_time(params, x, y, np.sinh(z))
            assert abs(direct - alt) <= 1e-9 * abs(direct)

    def test_domain(self, params13):
        with pytest.raises(DomainError):
            laguerre_semigroup_kernel(params13, unit_x(3), unit_x(3), -0.1 + 1j)

    def test_m_sector_projection(self, params13):
        # angular projection of the full kernel onto the degree-m zonal
        # kernel reproduces the radial sector
        from adeform.quad import sphere_cap_rule
        from adeform.specfun import gegenbauer_norm_table
        p = params13
        r, s, z, m = 0.7, 1.1, 0.6 + 0.2j, 2
        u, wq = sphere_cap_rule(p.N, 96)
        x = unit_x(p.N, r)
        vals = np.array([laguerre_semigroup_kernel(
            p, x, PolarPoint(s, (ui, math.sqrt(max(0.0, 1 - ui * ui)), 0.0)), z)
            for ui in u])
        pm = gegenbauer_norm_table(m, p.nu, u)[m]
        # <Lambda, P_m>/vol against the radial sector times P_m(1)-norm
        proj = np.sum(wq * vals * pm) / sphere_volume(p.N)
        sector = radial_kernel(p, m, r, s, z)
        norm = np.sum(wq * pm * pm) / sphere_volume(p.N)
        assert proj == pytest.approx(sector * norm, rel=1e-8)


class TestRadialKernel:
    def test_r_zero_m_zero(self, params):
        s, z = 1.2, 0.8
        lam = params.lambda_a
        want = (params.a ** -lam * np.sinh(z) ** -(lam + 1.0)
                * np.exp(-(s ** params.a / params.a) / np.tanh(z))
                / gamma_fn(lam + 1.0))
        got = radial_kernel(params, 0, 0.0, s, z)
        assert got == pytest.approx(want, rel=1e-12)

    def test_r_zero_higher_m_vanishes(self, params13):
        assert radial_kernel(params13, 1, 0.0, 1.2, 0.8) == 0.0
        assert radial_kernel(params13, 3, 0.0, 1.2, 0.8) == 0.0

    def test_symmetric(self, params13):
        assert radial_kernel(params13, 2, 0.4, 1.3, 0.5 + 0.2j) == pytest.approx(
            radial_kernel(params13, 2, 1.3, 0.4, 0.5 + 0.2j), rel=1e-13)


class TestWeber:
    def test_closed_form_value(self):
        num, clo = weber_integral_check(1.0, 1.0, 1.0, 0.0)
        # e^-2 I_0(2), frozen: besseli(0,2)*exp(-2)
        assert clo == pytest.approx(0.30850832255367094, rel=1e-13)
        assert num == pytest.approx(clo, rel=1e-7)

    def test_alpha_zero_reduces_to_laplace(self):
        num, clo = weber_integral_check(1e-12, 1.3, 0.7, 0.0)
        assert clo == pytest.approx(math.exp(-1.3 ** 2 / 0.7) / 0.7, rel=1e-9)
        assert num == pytest.approx(clo, rel=1e-7)

    def test_scaling_consistency(self):
        # T -> 2T gives W(a, b, d) = 2 W(a sqrt 2, b sqrt 2, 2d)
        n1, c1 = weber_integral_check(1.0, 0.8, 1.0, 0.5)
        n2, c2 = weber_integral_check(math.sqrt(2), 0.8 * math.sqrt(2),
                                      2.0, 0.5)
        assert n1 / 2.0 == pytest.approx(n2, rel=1e-7)
        assert c1 / 2.0 == pytest.approx(c2, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            weber_integral_check(-1.0, 1.0, 1.0, 0.0)


class TestMomentPolynomials:
    def test_base(self):
        assert moment_poly_p(0, 0.7, 3.0) == 1.0

    def test_one_step(self):
        nu = 0.7
        assert moment_poly_p(1, nu, 2.0) == pytest.approx(2.0 + nu + 1.0)

    def test_two_steps_symbolic(self):
        nu, x = 0.7, 1.3
        want = x ** 2 + (2 * nu + 4) * x + (nu + 1) * (nu + 2)
        assert moment_poly_p(2, nu, x) == pytest.approx(want, rel=1e-14)
        coef = moment_poly_coeffs(2, nu)
        assert coef == pytest.approx([(nu + 1) * (nu + 2), 2 * nu + 4, 1.0])

    def test_flow_values(self, params):
        a, lam = params.a, params.lambda_a
        assert moment_flow_f(params, 0, 0.7, 0.4) == 1.0
        assert moment_flow_f(params, 1, 0.7, 0.0) == pytest.approx(
            a * (lam + 1) * 0.7, rel=1e-13)
        assert moment_flow_f(params, 1, 0.0, 0.9) == pytest.approx(0.9)

    def test_flow_matches_recurrence_form(self, params):
        # f_m(t, |x|^a) = (a t)^m p_m(R/t) with R = |x|^a / a
        a, lam = params.a, params.lambda_a
        for m in (1, 2, 3, 4):
            for t, Ra in ((0.3, 0.8), (1.7, 0.1)):
                direct = moment_flow_f(params, m, t, Ra)
                via_p = (a * t) ** m * moment_poly_p(m, lam, Ra / (a * t))
                assert direct == pytest.approx(via_p, rel=1e-12)

    def test_poly_flow(self, params13):
        p = params13
        h = ZonalHarmonic(p.N, 1)
        x = unit_x(p.N, 0.9)
        # t = 0 returns the initial polynomial
        got = poly_flow(p, 2, 1, h, 0.0, x)
        want = x.r ** (2 * p.a) * float(h(x.cartesian[None, :]))
        assert got == pytest.approx(want, rel=1e-13)
        # harmonic factor kills the origin for l > 0
        x0 = PolarPoint.from_cartesian(np.zeros(p.N))
        assert poly_flow(p, 2, 1, h, 0.7, x0) == 0.0


class TestEigenfunctions:
    def test_ground_state_shape(self):
        p = DeformParams(2.0, 3)
        h0 = ZonalHarmonic(3, 0)
        x1 = unit_x(3, 0.5)
        x2 = unit_x(3, 1.5)
        ratio = eigenfunction(p, 0, 0, h0, x1) / eigenfunction(p, 0, 0, h0, x2)
        assert ratio == pytest.approx(math.exp(-(0.5 ** 2 - 1.5 ** 2) / 2.0),
                                      rel=1e-12)

    def test_unit_norm_by_quadrature(self, params):
        from adeform.quad import gauss_genlaguerre, sphere_product_rule
        p = params
        ell, m = 1, 1
        h = ZonalHarmonic(p.N, m)
        c = eigenfunction_norm_constant(p, ell, m, h)
        # norm recomputed on an independent grid
        lam_m = p.lambda_am(m)
        xg, wg = gauss_genlaguerre(24, lam_m)
        from adeform.specfun import laguerre
        radial = (p.a / 2.0) ** lam_m * 0.5 * float(
            np.sum(wg * laguerre(ell, lam_m, xg) ** 2))
        pts, wq = sphere_product_rule(p.N, m + 3)
        ang = float(np.sum(wq * np.asarray(h(pts)) ** 2))
        assert c ** 2 * radial * ang == pytest.approx(1.0, rel=1e-10)

    def test_eigenvalue_residual_fd(self):
        # (1/a)(|x|^{2-a} Lap - |x|^a) Phi = -(2l + lam_am + 1) Phi
        p = DeformParams(2.0, 3)
        ell, m = 1, 1
        h = ZonalHarmonic(3, m)
        xv = np.array([0.45, 0.3, -0.2])
        step = 3e-3

        def phi(pt):
            return eigenfunction(p, ell, m, h, PolarPoint.from_cartesian(pt))

        lap = 0.0
        for d in range(3):
            e = np.zeros(3)
            e[d] = step
            lap += (phi(xv + e) - 2 * phi(xv) + phi(xv - e)) / step ** 2
        r = float(np.linalg.norm(xv))
        op = (r ** (2 - p.a) * lap - r ** p.a * phi(xv)) / p.a
        want = eigenvalue(p, ell, m) * phi(xv)
        assert abs(op - want) <= 1e-3 * abs(want)

    def test_orthogonality(self, params13):
        from adeform.quad import gauss_genlaguerre
        from adeform.specfun import laguerre
        p = params13
        lam0 = p.lambda_am(0)
        xg, wg = gauss_genlaguerre(24, lam0)
        inner = float(np.sum(wg * laguerre(0, lam0, xg) * laguerre(1, lam0, xg)))
        assert abs(inner) < 1e-12
