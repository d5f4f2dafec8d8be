import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adeform.errors import ConvergenceError, DomainError
from adeform.ikernel import (IKernelArgs, growth_scan, ikernel,
                             ikernel_contour, ikernel_contour_grid,
                             ikernel_grid, ikernel_pairs, ikernel_series,
                             itilde_stable, ladder_terms)
from adeform.specfun import bessel_i_norm, gegenbauer, gegenbauer_norm


class TestArgs:
    def test_domain_guards(self):
        with pytest.raises(DomainError):
            IKernelArgs(-1.0, 0.5, 1.0, 0.0)
        with pytest.raises(DomainError):
            IKernelArgs(2.0, -0.6, 1.0, 0.0)   # 1 + b nu <= 0
        with pytest.raises(DomainError):
            IKernelArgs(1.0, 0.5, 1.0, 1.5)

    def test_boundary_t_allowed(self):
        IKernelArgs(1.0, 0.5, 1.0, 1.0)
        IKernelArgs(1.0, 0.5, 1.0, -1.0)


class TestSeriesRoute:
    def test_w_zero_is_one(self):
        res = ikernel_series(IKernelArgs(1.7, 0.3, 0.0, -0.4))
        assert res.value == 1.0 + 0j
        assert res.err_estimate == 0.0

    def test_exponential_identity(self):
        res = ikernel_series(IKernelArgs(1.0, 0.5, 2.0, 0.3))
        assert res.value.real == pytest.approx(math.exp(0.6), rel=1e-12)
        assert res.method == "series"
        assert res.terms_or_nodes > 0

    def test_exponential_identity_grid(self):
        # the identity holds for every nu at b = 1
        for nu in (0.25, 0.5, 2.0):
            for w in (0.5, 3.0, 11.0):
                for t in (-1.0, -0.2, 0.7, 1.0):
                    val = ikernel_series(IKernelArgs(1.0, nu, w, t)).value
                    assert abs(val - math.exp(w * t)) <= 1e-9 * math.exp(abs(w))

    def test_real_arguments_give_real_values(self):
        res = ikernel_series(IKernelArgs(2.0, 0.5, 1.5, 1.0))
        assert abs(res.value.imag) < 1e-14 * abs(res.value.real)

    def test_term_by_term_matches_plain_gegenbauer_form(self):
        # the normalized-Gegenbauer series equals the ((m+nu)/nu) C form
        b, nu, w, t = 1.5, 0.8, 2.2, 0.35
        total = 0.0
        for m in range(60):
            total += ((m + nu) / nu * gegenbauer(m, nu, t)
                      * (w / 2.0) ** (b * m)
                      * bessel_i_norm(b * (m + nu), w).real)
        total *= math.gamma(b * nu + 1.0)
        got = ikernel_series(IKernelArgs(b, nu, w, t)).value.real
        assert got == pytest.approx(total, rel=1e-12)

    def test_large_w_raises(self):
        # oscillatory arguments need > 400 terms past |w| ~ 400
        with pytest.raises(ConvergenceError):
            ikernel_series(IKernelArgs(1.0, 0.5, 700j, 0.3))

    def test_tol_guard(self):
        with pytest.raises(DomainError):
            ikernel_series(IKernelArgs(1.0, 0.5, 1.0, 0.3), tol=1e-16)


class TestContourRoute:
    @pytest.mark.parametrize("b,nu,w,t", [
        (1.0, 0.5, 2.0, 0.3),
        (2.0, 0.5, 1.5, 1.0),
        (2.0 / 3.0, 0.5, 10.0, -1.0),
        (2.0, 0.5, 5j, -0.3),
        (3.0, 0.0, 4.0, 0.2),
        (2.0, 1.5, -12j, 0.8),
    ])
    def test_matches_series(self, b, nu, w, t):
        # for real w the contour cancels to a floor ~ eps e^{|Re w|}, so
        # small values carry an absolute term on top of the relative one
        rs = ikernel_series(IKernelArgs(b, nu, complex(w), t))
        rc = ikernel_contour(IKernelArgs(b, nu, complex(w), t))
        floor = 1e-13 * math.exp(abs(complex(w).real))
        assert abs(rs.value - rc.value) <= 1e-8 * abs(rs.value) + floor

    def test_rejects_zero_argument(self):
        with pytest.raises(DomainError):
            ikernel_contour(IKernelArgs(1.0, 0.5, 0.0, 0.3))

    def test_err_estimate_positive_metadata(self):
        rc = ikernel_contour(IKernelArgs(1.0, 0.5, 3.0, 0.2))
        assert rc.method == "contour"
        assert rc.terms_or_nodes > 256
        assert rc.err_estimate >= 0.0

    def test_contour_grid_matches_scalar(self):
        t = np.array([-0.8, 0.0, 0.9])
        grid = ikernel_contour_grid(2.0, 0.5, -8j, t)
        for i, ti in enumerate(t):
            ref = ikernel_contour(IKernelArgs(2.0, 0.5, -8j, float(ti))).value
            assert abs(grid[i] - ref) <= 1e-10 * abs(ref)


class TestDispatcherAndSymmetry:
    def test_switch(self):
        assert ikernel(IKernelArgs(1.0, 0.5, 5.0, 0.1)).method == "series"
        # oscillatory arguments go to the contour past the switch; real
        # nonnegative ones stay on the (stable) series until its cap
        assert ikernel(IKernelArgs(1.0, 0.5, 25j, 0.1)).method == "contour"
        assert ikernel(IKernelArgs(1.0, 0.5, 25.0, 0.1)).method == "series"
        assert ikernel(IKernelArgs(1.0, 0.5, 0.0, 0.1)).value == 1.0 + 0j
        # past the series cap on the real axis only the scaled grid
        # engine applies; the scalar routes refuse rather than overflow
        with pytest.raises(ConvergenceError):
            ikernel(IKernelArgs(1.0, 0.5, 3000.0, 0.1))

    def test_large_w_exponential(self):
        val = ikernel(IKernelArgs(1.0, 0.5, 25.0, 0.3)).value
        assert val.real == pytest.approx(math.exp(7.5), rel=1e-7)

    def test_cross_check_mode_records_gap(self):
        res = ikernel(IKernelArgs(2.0, 0.5, 6.0, 0.4), cross_check=True)
        assert res.err_estimate < 1e-9

    @given(st.floats(0.5, 3.0), st.floats(0.1, 1.5), st.floats(0.3, 10.0),
           st.floats(-3.0, 3.0), st.floats(-1.0, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_conjugation_symmetry(self, b, nu, wre, wim, t):
        w = complex(wre, wim)
        v1 = ikernel(IKernelArgs(b, nu, w, t)).value
        v2 = ikernel(IKernelArgs(b, nu, w.conjugate(), t)).value
        assert v2 == pytest.approx(v1.conjugate(), rel=1e-9, abs=1e-12)

    def test_boundedness_near_zero(self):
        # |K - 1| <= C |w|^{min(2, b)} on |w| <= 0.1
        for b, nu in ((0.8, 1.0), (1.5, 0.5), (2.5, 0.5)):
            e = min(2.0, b)
            gaps = []
            for aw in (0.01, 0.03, 0.1):
                val = ikernel(IKernelArgs(b, nu, -1j * aw, 0.6)).value
                gaps.append(abs(val - 1.0) / aw ** e)
            assert max(gaps) < 10.0 * max(min(gaps), 1e-6)


class TestGrowthScan:
    def test_imaginary_axis_bounded(self):
        rows = growth_scan(2.0, 0.5, 0.3, [5.0, 10.0, 20.0, 40.0, 80.0])
        ratios = [r[2] for r in rows if r[0] >= 10.0]
        assert max(ratios) <= 1.5 * ratios[0]

    def test_small_w_limit(self):
        rows = growth_scan(2.0, 0.5, 0.3, [0.0, 0.01, 0.1])
        assert rows[0][1] == pytest.approx(1.0)
        assert rows[1][1] == pytest.approx(1.0, abs=0.01)

    def test_real_axis_exp_bound(self):
        rows = growth_scan(1.0, 0.5, 0.4, [5.0, 10.0, 20.0], "real-axis")
        # |K| e^{-|w||t|}: for b = 1 the kernel is e^{wt}
        for aw, mag, _ in rows:
            assert mag == pytest.approx(math.exp(aw * 0.4), rel=1e-7)

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            growth_scan(1.0, 0.5, 0.0, [3.0, 1.0])
        with pytest.raises(DomainError):
            growth_scan(1.0, 0.5, 0.0, [1.0], direction="diagonal")


class TestVectorEngines:
    def test_grid_matches_scalar(self):
        w = np.array([0.0, 0.7, 4.0, -9j], dtype=complex)
        t = np.array([-1.0, 0.2, 1.0])
        grid = ikernel_grid(2.0, 0.5, w, t)
        for i, wi in enumerate(w):
            for j, tj in enumerate(t):
                ref = ikernel(IKernelArgs(2.0, 0.5, complex(wi), float(tj))).value
                assert abs(grid[i, j] - ref) <= 1e-10 * max(abs(ref), 1e-12)

    def test_scaled_grid(self):
        w = np.array([30.0, 120.0])
        t = np.array([0.5])
        plain_small = ikernel_grid(1.0, 0.5, w[:1], t)[0, 0]
        scaled = ikernel_grid(1.0, 0.5, w, t, scaled=True)
        assert scaled[0, 0] == pytest.approx(plain_small.real * math.exp(-30.0),
                                             rel=1e-11)
        # e^{-w} K(1, nu, w, t) = e^{w(t-1)}
        assert scaled[1, 0] == pytest.approx(math.exp(120.0 * (0.5 - 1.0)),
                                             rel=1e-9)

    def test_pairs_matches_grid(self):
        w = np.array([0.5, 12.0, 300.0])
        t = np.array([0.9, -0.4, 0.99])
        pv = ikernel_pairs(2.0, 0.5, w, t, scaled=True)
        for i in range(w.size):
            ref = ikernel_grid(2.0, 0.5, w[i:i + 1], t[i:i + 1], scaled=True)[0, 0]
            assert abs(pv[i] - ref) <= 1e-9 * max(abs(ref), 1e-13)

    def test_ladder_against_direct_series(self):
        # the stable ladder agrees with plain summation where the latter
        # is well-conditioned
        for nu, w in [(0.3, 2.0), (4.0, 10.0), (0.0, 25.0)]:
            got = itilde_stable(nu, np.array([complex(w)]))[0]
            ref = bessel_i_norm(nu, w)
            assert abs(got - ref) <= 1e-12 * abs(ref)

    def test_ladder_mixed_batch(self):
        # small and large arguments share one call without contaminating
        # each other (seed routing is per element)
        w = np.array([0.5, 130.0, 5000.0], dtype=complex)
        A = ladder_terms(2.0, 0.5, 10, w, scaled=True)
        singles = [ladder_terms(2.0, 0.5, 10, w[i:i + 1], scaled=True)[0]
                   for i in range(w.size)]
        for i in range(w.size):
            keep = np.abs(singles[i]) > 1e-280
            assert np.allclose(A[i][keep], singles[i][keep], rtol=1e-11)
