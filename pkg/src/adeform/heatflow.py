"""Quadrature over the weighted measure dy/|y|^(2-a) and the heat flow H_t.

Every integral reduces, through the substitution S = s^a/a, to

    Int f dy/|y|^(2-a) = a^lam Int_0^inf S^lam dS Int_{S^(N-1)} f d eta

so the radial rules target the measure S^lam dS (generalized
Gauss-Laguerre against e^{-S/tau}, or a Gauss-Hermite panel around the
kernel peak when t << |x|^a/a), and the angular rule is Gauss-Jacobi in
u = <omega, eta> because every kernel is zonal.  Fields must declare
their own axis of symmetry; a field axis different from the probe
direction brings in one extra ring coordinate, never full cubature.

Radial weights are carried in log form: heat-kernel integrands combine
exp(radial_logw + kernel exponent), which stays bounded for every t.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, DomainError
from .ikernel import ikernel_grid, ikernel_pairs
from .kernels import DeformParams, PolarPoint
from .quad import (gauss_genlaguerre_log, gauss_hermite, gauss_jacobi,
                   subsphere_rule)

_MAX_DOUBLINGS = 3


@dataclass(frozen=True)
class ScalarField:
    """Scalar field on R^N, zonally symmetric about ``axis``.

    profile(s, u) evaluates the field at radius s and cosine u between
    the point's direction and the axis (vectorized, broadcasting).
    axis = None declares a radial field (profile must ignore u).
    growth_m declares polynomial growth: |f| <= C (1 + |y|^(m*a)).
    """
    profile: Callable
    axis: Optional[tuple] = None
    growth_m: float = 0.0

    def axis_vec(self, N):
        if self.axis is None:
            e = np.zeros(N)
            e[0] = 1.0
            return e
        v = np.asarray(self.axis, dtype=float)
        return v / np.linalg.norm(v)

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        s = np.linalg.norm(pts, axis=1)
        if self.axis is None:
            return np.asarray(self.profile(s, np.zeros_like(s)))
        ax = self.axis_vec(pts.shape[1])
        u = np.zeros_like(s)
        pos = s > 0
        u[pos] = np.clip(pts[pos] @ ax / s[pos], -1.0, 1.0)
        return np.asarray(self.profile(s, u))


def radial_field(g, growth_m=0.0):
    return ScalarField(profile=lambda s, u: g(s), axis=None, growth_m=growth_m)


def constant_field(c=1.0):
    return ScalarField(profile=lambda s, u: np.full_like(np.asarray(s, float), c),
                       axis=None, growth_m=0.0)


def zonal_field(g, axis, growth_m=0.0):
    return ScalarField(profile=g, axis=tuple(axis), growth_m=growth_m)


def monomial_field(params, m, axis=None, harmonic_profile=None, l=0):
    """|y|^(m a) or |y|^(m a) * (solid harmonic profile of degree l)."""
    a = params.a
    if harmonic_profile is None:
        return radial_field(lambda s: s ** (m * a), growth_m=m)
    prof = lambda s, u: s ** (m * a + l) * harmonic_profile(u)
    return ScalarField(profile=prof, axis=tuple(axis), growth_m=m + l / a + 1)


@dataclass(frozen=True)
class FlowRequest:
    """A heat-flow problem: context, time, and the field to flow."""
    params: DeformParams
    t: float
    field: ScalarField

    def __post_init__(self):
        if self.t <= 0:
            raise DomainError("need t > 0")
        if not math.isfinite(self.field.growth_m):
            raise DomainError("field must declare a finite growth exponent")


@dataclass(frozen=True)
class QuadratureRule:
    """Radial x angular rule bound to a DeformParams context.

    radial_S: nodes in S; radial_logw: log-weights for the measure
    S^lam dS (factor e^{S/tau} already folded back in, hence the logs).
    ang_u / ang_w: Gauss-Jacobi nodes and raw (1-u^2)^((N-3)/2) weights;
    sub_u / sub_w: ring rule around the pole, weights summing to
    vol(S^(N-2)).
    """
    params: DeformParams
    tau: float
    kind: str                 # 'laguerre' | 'hermite'
    radial_S: np.ndarray
    radial_logw: np.ndarray
    ang_u: np.ndarray
    ang_w: np.ndarray
    sub_u: np.ndarray
    sub_w: np.ndarray

    @property
    def n_rad(self):
        return self.radial_S.size

    @property
    def n_ang(self):
        return self.ang_u.size

    @property
    def cap_w(self):
        """Angular weights for 1-D (pole-aligned) integrands."""
        return self.ang_w * float(np.sum(self.sub_w))

    def moment_defect(self):
        """Worst relative error of int S^k e^{-S/tau} S^lam dS over k <= 5."""
        lam, tau = self.params.lambda_a, self.tau
        worst = 0.0
        for k in range(6):
            got = float(np.sum(np.exp(self.radial_logw) * self.radial_S ** k
                               * np.exp(-self.radial_S / tau)))
            exact = tau ** (lam + k + 1) * math.gamma(lam + k + 1)
            worst = max(worst, abs(got - exact) / exact)
        return worst


def _angular_nodes(N, n_ang):
    """Plain Gauss-Jacobi angular rule in u = <omega, eta>."""
    beta = (N - 3) / 2.0
    return gauss_jacobi(n_ang, beta, beta)


@lru_cache(maxsize=64)
def _laguerre_rule_cached(a, N, tau, n_rad, n_ang):
    params = DeformParams(a, N)
    lam = params.lambda_a
    x, logw_raw = gauss_genlaguerre_log(n_rad, lam)
    logw = (lam + 1.0) * math.log(tau) + logw_raw + x
    u, uw = _angular_nodes(N, n_ang)
    su, sw = subsphere_rule(N, max(n_ang // 2, 16))
    return QuadratureRule(params, tau, "laguerre", tau * x, logw, u, uw, su, sw)


@lru_cache(maxsize=64)
def _hermite_rule_cached(a, N, tau, center_sqrtS, n_rad, n_ang):
    """Nodes sigma = sqrt(S) around the kernel peak sqrt(R), width sqrt(tau).

    Used when tau << R: the Laguerre rule's nodes never reach the peak,
    while in sigma the integrand is a narrow Gaussian times a slowly
    varying factor.
    """
    params = DeformParams(a, N)
    lam = params.lambda_a
    xi, w = gauss_hermite(n_rad)
    sig = center_sqrtS + math.sqrt(tau) * xi
    keep = sig > 0
    xi, w, sig = xi[keep], w[keep], sig[keep]
    S = sig ** 2
    logw = np.log(w) + xi ** 2 + math.log(2.0 * math.sqrt(tau)) \
        + (2.0 * lam + 1.0) * np.log(sig)
    u, uw = _angular_nodes(N, n_ang)
    su, sw = subsphere_rule(N, max(n_ang // 2, 16))
    return QuadratureRule(params, tau, "hermite", S, logw, u, uw, su, sw)


def build_rule(params, tau, n_rad=96, n_ang=64, kind="laguerre", center_sqrtS=0.0):
    if kind == "laguerre":
        return _laguerre_rule_cached(params.a, params.N, float(tau), n_rad, n_ang)
    if kind == "hermite":
        return _hermite_rule_cached(params.a, params.N, float(tau),
                                    float(center_sqrtS), n_rad, n_ang)
    raise DomainError(f"unknown rule kind {kind!r}")


def _auto_rule(params, t, R, n_rad, n_ang):
    """Laguerre against e^{-S/t} unless the kernel peak S ~ R sits beyond
    what the node range resolves (t << R), where the Hermite panel in
    sigma = sqrt(S) takes over.  Rows with a large kernel argument get
    their angular rule re-adapted inside the flow core."""
    ratio = R / t
    if R > 0 and ratio + 12.0 * math.sqrt(ratio) + 30.0 > 2.0 * n_rad:
        return build_rule(params, t, max(n_rad, 64), n_ang, "hermite",
                          center_sqrtS=math.sqrt(R))
    return build_rule(params, t, n_rad, n_ang, "laguerre")


def weighted_integral(params, field, rule, check=False):
    """Int f(y) dy/|y|^(2-a) for a field matching the rule's decay profile.

    With check=True the radial count is doubled (up to three times) and
    ConvergenceError is raised if the value moves by > 1e-8 relative.
    """
    val = _weighted_integral_once(params, field, rule)
    if not check:
        return val
    n = rule.n_rad
    for _ in range(_MAX_DOUBLINGS):
        n *= 2
        r2 = build_rule(params, rule.tau, n, rule.n_ang, rule.kind)
        v2 = _weighted_integral_once(params, field, r2)
        if abs(v2 - val) <= 1e-8 * max(abs(v2), 1e-300):
            return v2
        val = v2
    raise ConvergenceError("weighted integral did not settle under node doubling")


def _weighted_integral_once(params, field, rule):
    a, lam = params.a, params.lambda_a
    s = (a * rule.radial_S) ** (1.0 / a)
    radw = np.exp(rule.radial_logw)
    fv = field.profile(s[:, None], rule.ang_u[None, :])
    fv = np.broadcast_to(fv, (s.size, rule.ang_u.size))
    ang = fv @ rule.cap_w
    return a ** lam * float(radw @ ang)


@lru_cache(maxsize=32)
def _layer_components(N, n_ang):
    """Standard pieces of the layer-adapted angular rule (scale-free)."""
    beta = (N - 3) / 2.0
    z, logwz_raw = gauss_genlaguerre_log(n_ang, beta)
    logwz = logwz_raw + z
    xb, wb = gauss_jacobi(n_ang, 0.0, beta)
    return z, logwz, xb, wb


def _row_angular(params, w_rows, rule):
    """Per-radial-row angular nodes/weights U, W of shape (n_rad, width).

    Rows whose kernel argument w keeps the Gegenbauer content within the
    plain rule's exactness reuse rule.ang_u; rows past it get a rule in
    zeta = (w/b^2)(1-u) matching the kernel's boundary-layer profile
    e^{-zeta}, plus a closing panel for the (negligible) bulk.  Returns
    None when no row needs the layer, so callers keep the product path.
    """
    n_ang = rule.n_ang
    b = params.b
    m_need = (9.5 * np.sqrt(np.maximum(w_rows, 0.0)) + 25.0) / b
    layered = m_need > 0.85 * (2.0 * n_ang - 1.0)
    if not np.any(layered):
        return None
    beta = (params.N - 3) / 2.0
    z, logwz, xb, wb = _layer_components(params.N, n_ang)
    width = z.size + xb.size
    U = np.ones((w_rows.size, width))
    W = np.zeros((w_rows.size, width))
    npl = rule.ang_u.size
    for i in np.where(~layered)[0]:
        U[i, :npl] = rule.ang_u
        W[i, :npl] = rule.ang_w
    for i in np.where(layered)[0]:
        scale = b * b / w_rows[i]
        ua = 1.0 - scale * z
        keep = ua > -1.0
        za, la, ua = z[keep], logwz[keep], ua[keep]
        wa = np.exp(la) * scale ** (beta + 1.0) * (1.0 + ua) ** beta
        u_edge = float(ua.min()) if ua.size else 1.0
        U[i, :ua.size] = ua
        W[i, :ua.size] = wa
        if u_edge > -1.0 + 1e-12:
            ub = -1.0 + (u_edge + 1.0) * (xb + 1.0) / 2.0
            wbulk = wb * ((u_edge + 1.0) / 2.0) ** (beta + 1.0) * (1.0 - ub) ** beta
            U[i, ua.size:ua.size + ub.size] = ub
            W[i, ua.size:ua.size + ub.size] = wbulk
    return U, W


def _flow_core(params, t, R, field, gamma, rule):
    """H_t u at radius-R probe whose direction makes angle gamma with the
    field axis.  Pole of the angular rule sits on the probe direction."""
    a, lam = params.a, params.lambda_a
    S = rule.radial_S
    s = (a * S) ** (1.0 / a)
    w = 2.0 * np.sqrt(R * S) / t
    # radial weight times the kernel's radial exponential e^{-(R+S)/t + w},
    # combined in log form so neither factor overflows alone
    klog = rule.radial_logw - (math.sqrt(R) - np.sqrt(S)) ** 2 / t
    pref = params.c_a * a ** lam * t ** (-(lam + 1.0))
    sub_total = float(np.sum(rule.sub_w))
    if R == 0.0:
        # kernel is angularly flat; pole on the field axis
        prof = np.broadcast_to(field.profile(s[:, None], rule.ang_u[None, :]),
                               (s.size, rule.ang_u.size))
        ang = prof @ rule.cap_w
        return pref * float(np.exp(klog) @ ang)
    rows = _row_angular(params, w, rule)
    if rows is None:
        U = np.broadcast_to(rule.ang_u[None, :], (s.size, rule.ang_u.size))
        W = np.broadcast_to(rule.ang_w[None, :], U.shape)
        kern = ikernel_grid(params.b, params.nu, w, rule.ang_u, scaled=True).real
    else:
        U, W = rows
        kern = ikernel_pairs(params.b, params.nu,
                             np.repeat(w, U.shape[1]), U.ravel(),
                             scaled=True).real.reshape(U.shape)
    if field.axis is None:
        prof = field.profile(s, np.zeros_like(s))[:, None]
        ang = np.einsum("ij,ij,ij->i", kern, W, np.broadcast_to(prof, U.shape))
        ang = ang * sub_total
    else:
        singa = math.sqrt(max(0.0, 1.0 - gamma * gamma))
        ufield = gamma * U[:, :, None] \
            + singa * np.sqrt(np.clip(1.0 - U[:, :, None] ** 2, 0.0, None)) \
            * rule.sub_u[None, None, :]
        prof = field.profile(s[:, None, None], ufield)
        prof = np.broadcast_to(prof, ufield.shape)
        ang = np.einsum("ij,ijk,ij,k->i", kern, prof, W, rule.sub_w)
    return pref * float(np.exp(klog) @ ang)


def heat_flow(req, x, rule=None, n_rad=96, n_ang=64):
    """H_t u(x) = c_a Int h(x, y; t) u(y) dy/|y|^(2-a) by quadrature."""
    params, t, field = req.params, req.t, req.field
    xp = x if isinstance(x, PolarPoint) else PolarPoint.from_cartesian(x)
    R = xp.r ** params.a / params.a
    if rule is None:
        rule = _auto_rule(params, t, R, n_rad, n_ang)
    if field.axis is None or xp.r == 0.0:
        gamma = 1.0
    else:
        ax = field.axis_vec(params.N)
        gamma = float(np.clip(np.dot(xp.omega, ax), -1.0, 1.0))
    return _flow_core(params, t, R, field, gamma, rule)


def heat_flow_radial_batch(req, radii, u_cos, rule=None, n_rad=96, n_ang=64):
    """H_t u at the grid of probes y(s_i, c_j) = s_i (c_j ax + sqrt(1-c_j^2) ax_perp).

    Shares the kernel grid across all probe directions of equal radius,
    which makes nested (composition) quadrature affordable.  Returns a
    (len(radii), len(u_cos)) matrix.
    """
    params, t, field = req.params, req.t, req.field
    a, lam = params.a, params.lambda_a
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    u_cos = np.atleast_1d(np.asarray(u_cos, dtype=float))
    out = np.empty((radii.size, u_cos.size))
    for i, rad in enumerate(radii):
        R = rad ** a / a
        rl = rule if rule is not None else _auto_rule(params, t, R, n_rad, n_ang)
        S = rl.radial_S
        s = (a * S) ** (1.0 / a)
        w = 2.0 * np.sqrt(R * S) / t
        klog = rl.radial_logw - (math.sqrt(R) - np.sqrt(S)) ** 2 / t
        rows = _row_angular(params, w, rl) if R > 0 else None
        if rows is None:
            U = np.broadcast_to(rl.ang_u[None, :], (s.size, rl.ang_u.size))
            W = np.broadcast_to(rl.ang_w[None, :], U.shape)
            kern = ikernel_grid(params.b, params.nu, w, rl.ang_u, scaled=True).real
        else:
            U, W = rows
            kern = ikernel_pairs(params.b, params.nu,
                                 np.repeat(w, U.shape[1]), U.ravel(),
                                 scaled=True).real.reshape(U.shape)
        radw = np.exp(klog)
        pref = params.c_a * a ** lam * t ** (-(lam + 1.0))
        if field.axis is None:
            prof = np.broadcast_to(field.profile(s, np.zeros_like(s))[:, None],
                                   U.shape)
            out[i, :] = pref * float(radw @ np.einsum("ij,ij,ij->i", kern, W, prof))
            continue
        sing = np.sqrt(np.clip(1.0 - u_cos ** 2, 0.0, None))
        # ufield[c, i, j, k] = c U_ij + sqrt(1-c^2) sqrt(1-U_ij^2) u2_k
        ufield = (u_cos[:, None, None, None] * U[None, :, :, None]
                  + sing[:, None, None, None]
                  * np.sqrt(np.clip(1.0 - U[None, :, :, None] ** 2, 0.0, None))
                  * rl.sub_u[None, None, None, :])
        prof = field.profile(s[None, :, None, None], ufield)
        prof = np.broadcast_to(prof, ufield.shape)
        ang = np.einsum("cijk,ij,ij,k->ci", prof, kern, W, rl.sub_w)
        out[i, :] = pref * (ang @ radw)
    return out


def flow_as_field(req, n_s=64, n_c=48, s_max=None, rule=None):
    """H_t u as a ScalarField (zonal about u's axis), interpolated from a
    tensor grid in (s, u_cos).  A convenience for probes off the axis;
    nested checks at the origin use the exact path in composition_check."""
    params, field = req.params, req.field
    if s_max is None:
        x_top = 4.0 * 96
        s_max = float((params.a * (x_top * req.t + 4.0)) ** (1.0 / params.a)) + 2.0
    s_nodes = np.linspace(0.0, s_max, n_s)
    c_nodes = np.cos(np.pi * (np.arange(n_c) + 0.5) / n_c)[::-1]
    vals = heat_flow_radial_batch(req, s_nodes, c_nodes, rule=rule)
    axis = field.axis

    from scipy.interpolate import RegularGridInterpolator
    interp = RegularGridInterpolator((s_nodes, c_nodes), vals, method="cubic",
                                     bounds_error=False, fill_value=None)

    def prof(s, u):
        s_b, u_b = np.broadcast_arrays(np.asarray(s, float), np.asarray(u, float))
        pts = np.stack([np.clip(s_b, 0.0, s_max), np.clip(u_b, c_nodes[0], c_nodes[-1])],
                       axis=-1)
        return interp(pts)

    if axis is None:
        return ScalarField(profile=lambda s, u: prof(s, np.zeros_like(np.asarray(s, float))),
                           axis=None, growth_m=field.growth_m)
    return ScalarField(profile=prof, axis=axis, growth_m=field.growth_m)


def heat_equation_residual(req, x, h_step=None, t_step=None):
    """Finite-difference residual of d/dt - (1/a)|x|^(2-a) Lap at (t, x).

    Fourth-order five-point Laplacian per coordinate, central difference
    in t; relative to the magnitude of the time derivative.
    """
    params, t, field = req.params, req.t, req.field
    xc = np.asarray(x.cartesian if isinstance(x, PolarPoint) else x, dtype=float)
    r = float(np.linalg.norm(xc))
    if r == 0:
        raise DomainError("residual probe must avoid the origin")
    h = h_step if h_step is not None else 0.02 * r
    dt = t_step if t_step is not None else 0.01 * t

    def flow_at(pt, tt):
        return heat_flow(FlowRequest(params, tt, field), PolarPoint.from_cartesian(pt))

    dval = (flow_at(xc, t + dt) - flow_at(xc, t - dt)) / (2.0 * dt)
    f0 = flow_at(xc, t)
    lap = 0.0
    for d in range(params.N):
        e = np.zeros(params.N)
        e[d] = h
        lap += (-flow_at(xc + 2 * e, t) + 16 * flow_at(xc + e, t) - 30 * f0
                + 16 * flow_at(xc - e, t) - flow_at(xc - 2 * e, t)) / (12.0 * h * h)
    residual = dval - (1.0 / params.a) * r ** (2.0 - params.a) * lap
    return float(residual), float(abs(residual) / max(abs(dval), 1e-300))


def initial_condition_check(req0, x, t_list):
    """Table of (t, |H_t u(x) - u(x)|) for t descending toward zero."""
    params, field = req0.params, req0.field
    xp = x if isinstance(x, PolarPoint) else PolarPoint.from_cartesian(x)
    u_here = float(np.asarray(field(xp.cartesian[None, :])).ravel()[0])
    rows = []
    for t in t_list:
        val = heat_flow(FlowRequest(params, t, field), xp)
        rows.append((float(t), abs(val - u_here)))
    return rows, u_here


def composition_check(params, t1, t2, field, x, n_rad=96, n_ang=48):
    """Both sides of H_{t1+t2} u = H_{t1}(H_{t2} u) plus their relative gap.

    At x = 0 the nested side is a genuine double quadrature with the
    inner flow evaluated exactly at every outer node (the outer kernel is
    angularly flat there, so the outer rule is one-dimensional).  Off the
    origin the inner flow goes through the interpolated field, which
    loosens the attainable gap.
    """
    xp = x if isinstance(x, PolarPoint) else PolarPoint.from_cartesian(x)
    lhs = heat_flow(FlowRequest(params, t1 + t2, field), xp)
    inner_req = FlowRequest(params, t2, field)
    if xp.r == 0.0:
        a, lam = params.a, params.lambda_a
        rule1 = build_rule(params, t1, n_rad, n_ang)
        S = rule1.radial_S
        s_nodes = (a * S) ** (1.0 / a)
        inner_vals = heat_flow_radial_batch(inner_req, s_nodes, rule1.ang_u,
                                            n_rad=n_rad, n_ang=n_ang)
        klog = rule1.radial_logw - S / t1
        ang = inner_vals @ rule1.cap_w
        rhs = params.c_a * a ** lam * t1 ** (-(lam + 1.0)) * float(np.exp(klog) @ ang)
    else:
        flowed = flow_as_field(inner_req)
        rhs = heat_flow(FlowRequest(params, t1, flowed), xp)
    gap = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    return lhs, rhs, gap


def max_principle_scan(params, field, t_grid, x_grid, sup_u=None):
    """Max of H_t u over the probe grid against sup u."""
    if sup_u is None:
        s = np.linspace(0, 50, 4001)
        u = np.linspace(-1, 1, 41)
        sup_u = float(np.max(field.profile(s[:, None], u[None, :])))
    worst = -math.inf
    for t in t_grid:
        for x in x_grid:
            val = heat_flow(FlowRequest(params, t, field),
                            PolarPoint.from_cartesian(np.asarray(x, dtype=float)))
            worst = max(worst, val)
    return worst, sup_u
