"""Named verification suites behind the command-line `verify` command.

Each check compares a computed quantity against an independent value
(closed form, second evaluation route, or statistical bound) and reports
a uniform record; a suite passes when every check does.  The full-size
suites mirror the package acceptance tests at reduced grids so they stay
interactive.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import brownian, heatflow, ikernel, kernels, specfun
from .kernels import DeformParams, PolarPoint


@dataclass(frozen=True)
class CheckResult:
    name: str
    identity: str
    value: float
    expected: float
    tol: float
    passed: bool

    def to_json(self):
        return asdict(self)


def _check(name, identity, value, expected, tol, relative=True):
    gap = abs(value - expected)
    if relative:
        gap /= max(abs(expected), 1e-300)
    return CheckResult(name, identity, float(np.real(value)),
                       float(np.real(expected)), tol, bool(gap <= tol))


def suite_specfun(quick=False):
    checks = []
    checks.append(_check("gamma_vs_contour", "1/gamma loop integral",
                         specfun.reciprocal_gamma_contour(0.5),
                         1.0 / specfun.gamma_fn(0.5), 1e-10))
    checks.append(_check("gamma_half", "gamma(1/2) = sqrt(pi)",
                         specfun.gamma_fn(0.5), math.sqrt(math.pi), 1e-14))
    s = specfun.bessel_i_norm(1.5, 5j)
    c = specfun.bessel_i_norm_contour(1.5, 5j)
    checks.append(_check("bessel_series_vs_contour", "itilde two routes",
                         abs(s - c) / abs(s), 0.0, 1e-9, relative=False))
    # derivative: d/dw itilde_nu = (w/2) itilde_{nu+1} (the series forces
    # the w/2 factor)
    h = 1e-5
    nu, w = 0.7, 1.3
    fd = (specfun.bessel_i_norm(nu, w + h) - specfun.bessel_i_norm(nu, w - h)) / (2 * h)
    checks.append(_check("bessel_derivative", "d itilde/dw = (w/2) itilde_{nu+1}",
                         fd.real, (w / 2) * specfun.bessel_i_norm(nu + 1, w).real,
                         1e-6))
    fd = (specfun.gegenbauer_norm(3, 0.8, 0.4 + h)
          - specfun.gegenbauer_norm(3, 0.8, 0.4 - h)) / (2 * h)
    checks.append(_check("gegenbauer_derivative",
                         "d gegenbauer_norm/dt = 2(nu+1) gegenbauer_norm'",
                         fd, 2 * (0.8 + 1) * specfun.gegenbauer_norm(2, 1.8, 0.4),
                         1e-6))
    # Laguerre orthogonality under x^lam e^-x
    from .quad import gauss_genlaguerre
    x, wq = gauss_genlaguerre(16, 0.5)
    inner = float(np.sum(wq * specfun.laguerre(1, 0.5, x) * specfun.laguerre(2, 0.5, x)))
    checks.append(_check("laguerre_orthogonality", "int L1 L2 x^lam e^-x = 0",
                         inner, 0.0, 1e-12, relative=False))
    checks.append(_check("zonal_reproducing", "degree-2 self-average",
                         specfun.zonal_sphere_average(2, 2, 3, 0.4),
                         specfun.zonal(2, 3, 0.4), 1e-10))
    checks.append(_check("zonal_cross_degree", "cross-degree average",
                         specfun.zonal_sphere_average(1, 2, 3, 0.4), 0.0,
                         1e-10, relative=False))
    return checks


def suite_series_kernel(quick=False):
    checks = []
    n = 4 if quick else 10
    ws = np.concatenate([np.linspace(1, 12, n // 2),
                         1j * np.linspace(2, 20, n - n // 2)])
    ts = np.linspace(-1, 1, n)
    worst = 0.0
    for b, nu in ((1.0, 0.5), (2.0, 0.5), (2 / 3, 1.0), (2.0, 0.0)):
        for w in ws:
            for t in ts:
                args = ikernel.IKernelArgs(b, nu, complex(w), float(t))
                rs = ikernel.ikernel_series(args)
                rc = ikernel.ikernel_contour(args)
                worst = max(worst, abs(rs.value - rc.value)
                            / max(abs(rs.value), 1e-300))
    checks.append(_check("series_vs_contour", "two-route agreement grid",
                         worst, 0.0, 1e-8, relative=False))
    val = ikernel.ikernel(ikernel.IKernelArgs(1.0, 0.5, 2.0, 0.3)).value
    checks.append(_check("exp_reduction", "K(1, nu, w, t) = e^{wt}",
                         val.real, math.exp(0.6), 1e-10))
    val = ikernel.ikernel(ikernel.IKernelArgs(1.0, 0.5, 25.0, 0.3)).value
    checks.append(_check("exp_reduction_large", "dispatcher at w = 25",
                         val.real, math.exp(7.5), 1e-7))
    conj_gap = abs(ikernel.ikernel(ikernel.IKernelArgs(2.0, 0.5, 3 + 2j, 0.4)).value.conjugate()
                   - ikernel.ikernel(ikernel.IKernelArgs(2.0, 0.5, 3 - 2j, 0.4)).value)
    checks.append(_check("conjugation", "K(conj w) = conj K(w)", conj_gap,
                         0.0, 1e-12, relative=False))
    rows = ikernel.growth_scan(2.0, 0.5, 0.3, [30.0, 50.0, 80.0, 100.0])
    ratios = [r[2] for r in rows]
    checks.append(_check("growth_envelope", "bounded ratio on the imaginary axis",
                         max(ratios) / ratios[0], 1.0, 2.0, relative=False))
    small = ikernel.ikernel(ikernel.IKernelArgs(2.0, 1.0, 0.05, 0.2)).value
    checks.append(_check("small_w_bounded", "K -> 1 as w -> 0",
                         small.real, 1.0, 0.05))
    return checks


def suite_kernel_identities(params, quick=False):
    checks = []
    N = params.N
    e1 = np.concatenate([[1.0], np.zeros(N - 1)])
    x0 = PolarPoint.from_cartesian(np.zeros(N))
    y1 = PolarPoint.from_cartesian(e1)
    t = 1.0
    checks.append(_check("gaussian_at_origin", "h(0, y; t) closed form",
                         kernels.heat_kernel(params, x0, y1, t),
                         t ** (-(params.lambda_a + 1))
                         * math.exp(-1.0 / (params.a * t)), 1e-12))
    xa = PolarPoint.from_cartesian(0.7 * e1)
    e2 = np.zeros(N); e2[1] = 1.0
    yb = PolarPoint.from_cartesian(0.9 * e1 + 0.8 * e2)
    checks.append(_check("symmetry", "h(x, y; t) = h(y, x; t)",
                         kernels.heat_kernel(params, xa, yb, 0.7),
                         kernels.heat_kernel(params, yb, xa, 0.7), 1e-13))
    if not quick:
        spec = kernels.heat_kernel_spectral(params, xa, yb, 0.8)
        checks.append(_check("spectral_oracle", "spectral integral vs closed form",
                             spec, kernels.heat_kernel(params, xa, yb, 0.8), 1e-6))
    num, clo = kernels.weber_integral_check(1.0, 1.0, 1.0, 0.0)
    checks.append(_check("weber_integral", "second exponential integral",
                         num, clo, 1e-7))
    z = 0.4 + 0.3j
    lval = kernels.laguerre_semigroup_kernel(params, xa, yb, z)
    pre = np.exp(-(xa.r ** params.a + yb.r ** params.a) / params.a
                 * (1 / np.tanh(z) - 1 / np.sinh(z)))
    alt = pre * kernels._heat_closed_complex_time(params, xa, yb, np.sinh(z))
    checks.append(_check("semigroup_two_routes", "sinh route vs direct",
                         abs(lval - alt), 0.0, 1e-9, relative=False))
    p2 = kernels.moment_poly_p(2, params.lambda_a, 0.7)
    lam = params.lambda_a
    checks.append(_check("moment_poly", "recurrence vs expansion",
                         p2, 0.49 + (2 * lam + 4) * 0.7 + (lam + 1) * (lam + 2),
                         1e-13))
    # heat flow moments against the closed form
    fld = heatflow.monomial_field(params, 2)
    v = heatflow.heat_flow(heatflow.FlowRequest(params, 0.7, fld),
                           PolarPoint.from_cartesian(0.9 * e1))
    checks.append(_check("moment_flow", "flow of |y|^{2a} vs closed form", v,
                         kernels.moment_flow_f(params, 2, 0.7, 0.9 ** params.a),
                         1e-8))
    return checks


def suite_heatflow(params, quick=False):
    checks = []
    N = params.N
    e1 = np.concatenate([[1.0], np.zeros(N - 1)])
    x = PolarPoint.from_cartesian(0.8 * e1)
    mass = heatflow.heat_flow(heatflow.FlowRequest(params, 0.5,
                                                   heatflow.constant_field()), x)
    checks.append(_check("total_mass", "flow of 1 equals 1", mass, 1.0, 1e-8))
    fld = heatflow.zonal_field(lambda s, u: np.exp(-0.3 * s) * (1 + 0.2 * u),
                               axis=tuple(e1))
    lhs, rhs, gap = heatflow.composition_check(
        params, 0.4, 0.6, fld, PolarPoint.from_cartesian(np.zeros(N)),
        n_rad=64 if quick else 96, n_ang=32 if quick else 48)
    checks.append(_check("composition", "nested vs single flow", gap, 0.0,
                         1e-5, relative=False))
    res, rel = heatflow.heat_equation_residual(
        heatflow.FlowRequest(params, 0.8,
                             heatflow.radial_field(lambda s: np.exp(-s ** 2 / 2.0))),
        PolarPoint.from_cartesian(0.9 * e1))
    checks.append(_check("pde_residual", "time derivative matches generator",
                         rel, 0.0, 1e-4, relative=False))
    rows, _ = heatflow.initial_condition_check(
        heatflow.FlowRequest(params, 1.0, heatflow.monomial_field(params, 1)),
        PolarPoint.from_cartesian(e1), [1e-3])
    expected = params.a * (params.lambda_a + 1) * 1e-3
    checks.append(_check("initial_condition", "gap at t -> 0 is the moment term",
                         rows[0][1], expected, 1e-3))
    bounded = heatflow.zonal_field(lambda s, u: np.sin(s * u), axis=tuple(e1))
    worst, sup_u = heatflow.max_principle_scan(
        params, bounded, [0.2, 1.0], [0.5 * e1, 1.5 * e1])
    checks.append(_check("max_principle", "flow max below sup u",
                         max(worst - sup_u, 0.0), 0.0, 1e-8, relative=False))
    return checks


def suite_brownian(params, quick=False):
    checks = []
    n = 20000 if quick else 100000
    N = params.N
    e1 = np.concatenate([[1.0], np.zeros(N - 1)])
    ks = brownian.endpoint_ks_origin(params, 1.0, n, 4, seed=101)
    checks.append(_check("ks_origin", "radial law from the origin",
                         ks.pvalue, 1.0, 0.99, relative=False))
    est, sig, closed = brownian.moment_check_mc(
        params, PolarPoint.from_cartesian(e1), 0.8, n, 4, seed=102)
    checks.append(_check("moment_first", "E|B_t|^a within 3 sigma",
                         abs(est - closed), 0.0, 3 * sig, relative=False))
    boxes = [brownian.ShellCapBox(0.3, 1.2, -0.5, 0.9),
             brownian.ShellCapBox(0.8, 2.0)]
    rows = brownian.chapman_kolmogorov_mc(params, PolarPoint.from_cartesian(0.5 * e1),
                                          0.3, 0.5, boxes, n, seed=103)
    worst = max(abs(emp - clo) / (3 * sg) for emp, clo, sg in rows)
    checks.append(_check("chapman_kolmogorov", "two-step box masses",
                         worst, 0.0, 1.0, relative=False))
    rows, slope = brownian.continuity_moment_mc(
        params, PolarPoint.from_cartesian(0.7 * e1), 0.5,
        [1e-3, 3e-3, 1e-2, 3e-2, 1e-1], n // 2, seed=104)
    checks.append(_check("continuity_slope", "fourth-moment slope >= 1.9",
                         min(slope, 2.0), 2.0, 0.1, relative=False))
    return checks


_SUITES = {
    "specfun": lambda params, quick: suite_specfun(quick),
    "scripti": lambda params, quick: suite_series_kernel(quick),
    "kernel-identities": lambda params, quick: suite_kernel_identities(params, quick),
    "heatflow": lambda params, quick: suite_heatflow(params, quick),
    "brownian": lambda params, quick: suite_brownian(params, quick),
}


def run_suite(name, params=None, quick=False):
    """Run one named suite (or 'all'); returns a list of CheckResult."""
    if params is None:
        params = DeformParams(1.0, 3)
    if name == "all":
        out = []
        for key in _SUITES:
            out.extend(_SUITES[key](params, quick))
        return out
    if name not in _SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from "
                       f"{sorted(_SUITES) + ['all']}")
    return _SUITES[name](params, quick)
