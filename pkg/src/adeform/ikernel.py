"""Two-route evaluation of the Bessel-Gegenbauer series kernel.

The kernel is, for b > 0, 1 + b nu > 0, complex w and t in [-1, 1],

    K(b, nu, w, t) = Gamma(b nu + 1) * sum_m (w/2)^{b m}
                     * itilde_{b(m+nu)}(w) * gegenbauer_norm(m, nu, t)

It equals e^{w t} at b = 1, is 1 at w = 0, and is the angular-radial
building block of every integral kernel in this package.

Two independent evaluation routes are provided: the defining series
(with Bessel terms produced by a stable downward ladder) and the loop
integral

    Gamma(b nu+1)/(2 pi i) * (w/2)^{-b nu} * Int z^{-b nu}
        (1 - z^{-2b}) (1 - 2 t z^{-b} + z^{-2b})^{-(nu+1)}
        e^{(w/2)(z + 1/z)} dz / z

over a ray-circle-ray path of radius 1+eps rotated by -arg(w).  Their
agreement is one of the package's primary acceptance checks.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive

from . import _fastpath as _fast
from .errors import ConvergenceError, DomainError
from .specfun import gamma_fn, gegenbauer_norm_table, _hankel_loop_nodes, _zpow

_SERIES_M_CAP = 400          # scalar series contract cap
_GRID_M_CAP = 6000           # internal engines (quadrature grids, samplers)
_LADDER_RESCALE = 1e250
_LOG_RESCALE = math.log(_LADDER_RESCALE)


@dataclass(frozen=True)
class IKernelArgs:
    """Argument bundle: b > 0, 1 + b*nu > 0, |t| <= 1."""
    b: float
    nu: float
    w: complex
    t: float

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"need b > 0, got {self.b}")
        if not 1.0 + self.b * self.nu > 0:
            raise DomainError(f"need 1 + b*nu > 0, got {1 + self.b * self.nu}")
        if abs(self.t) > 1 + 1e-12:
            raise DomainError(f"need |t| <= 1, got {self.t}")


@dataclass(frozen=True)
class IKernelResult:
    value: complex
    method: str                 # 'series' or 'contour'
    terms_or_nodes: int
    err_estimate: float


def _sigma_need(w, log_tail=41.5):
    """Order beyond which the m-terms are negligible, per w (array-safe).

    Real positive w: terms e^{-w} (w/2)^{bm} itilde decay like
    exp(-sigma^2/2w) once sigma > sqrt(2 * log_tail * w); the default
    tail is ~e^-41 (full double precision).  Complex w: the terms are
    J-like in |w| and die past the Airy transition at sigma ~ |w|.
    """
    w = np.asarray(w)
    aw = np.abs(w)
    realish = (np.abs(w.imag) <= 1e-12 * np.maximum(aw, 1e-300)) & (w.real >= 0)
    need_real = np.sqrt(2.0 * log_tail * aw) + 25.0
    need_cplx = aw + 10.0 * np.cbrt(aw) + 25.0
    return np.where(realish, need_real, need_cplx), realish


def _check_interval(growth):
    """Iterations between overflow checks, sized so the carried values
    cannot pass from the 1e250 rescale threshold to overflow in between."""
    return max(1, min(16, int(46.0 / max(1.0, math.log10(max(growth, 10.0))))))


def _g_seed(sigma, q):
    """Gamma(sigma+1)*itilde_sigma as (mantissa, log-scale), vectorized over q.

    g(sigma) = sum_k q^k / (k! (sigma+1)_k); for real q >= 0 all terms are
    positive so any sigma works; for complex q the caller must keep
    sigma >= |q| so the terms decrease from the start (no cancellation).
    """
    q = np.atleast_1d(q)
    dtype = np.complex128 if np.iscomplexobj(q) else np.float64
    tot = np.ones(q.shape, dtype=dtype)
    val = np.ones(q.shape, dtype=dtype)
    scale = np.zeros(q.shape)
    step = _check_interval(float(np.max(np.abs(q))) / max(sigma, 1.0))
    k = 0
    while True:
        k += 1
        val = val * q / (k * (sigma + k))
        tot = tot + val
        if k % step == 0 or k > 199996:
            big = np.abs(tot) > _LADDER_RESCALE
            if np.any(big):
                tot[big] *= 1.0 / _LADDER_RESCALE
                val[big] *= 1.0 / _LADDER_RESCALE
                scale[big] += _LOG_RESCALE
            if np.all(np.abs(val) <= 1e-19 * np.abs(tot)) or k > 200000:
                break
    return tot, scale


def ladder_terms(b, nu, m_max, w, scaled=False):
    """Terms (w/2)^{bm} itilde_{b(m+nu)}(w) for m = 0..m_max, w a vector.

    Computed per unit-spaced order ladder by the downward recurrence on
    g_s = Gamma(s+1) itilde_s(w):

        g_{s-1} = g_s + (w/2)^2 / (s (s+1)) * g_{s+1}

    which runs in the numerically dominant direction for both I- and
    J-type behavior.  Seeds come from the g-series at an order high
    enough that its terms decrease monotonically.  With ``scaled`` the
    result carries e^{-|Re w|}, which keeps heat-kernel products bounded.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    nw = w.size
    out = np.zeros((nw, m_max + 1), dtype=complex)
    zero = w == 0
    if np.any(zero):
        out[zero, 0] = 1.0 / gamma_fn(b * nu + 1.0)
    live = ~zero
    if not np.any(live):
        return out
    wl = w[live]
    q = (wl / 2.0) ** 2
    aq = np.abs(q)
    resc = np.abs(wl.real) if scaled else np.zeros(wl.size)
    logw2 = np.log(np.abs(wl) / 2.0)
    argw2 = np.angle(wl)
    sig_need, realish = _sigma_need(wl)
    # own-series seeds need sigma_top >= |q| unless the terms are positive
    seed_floor = np.where(realish, 0.0, 1.05 * aq + 8.0)
    sig_top_req = float(np.max(np.maximum(sig_need, seed_floor)))

    sigmas = b * (nu + np.arange(m_max + 1))
    frac = np.round(np.mod(sigmas, 1.0), 9)
    # batches of purely real nonnegative arguments run in float64: the
    # ladder is the sampler's hot loop and complex arithmetic costs ~3x
    all_real = bool(np.all(realish))
    dtype = np.float64 if all_real else np.complex128
    if all_real:
        q = q.real
    sub = np.zeros((wl.size, m_max + 1), dtype=dtype)
    aq_max = float(np.max(aq))
    # for large real arguments the g-series seed needs ~sqrt(|q|) terms;
    # the scaled library Bessel gives the same seed in O(1) there.  The
    # fast path needs ive(sig, w) representable (sig^2/2w < ~600): where
    # it is not, q << sig^2 and the series seed converges in a few terms
    # anyway, so each element lands on whichever route is cheap for it.
    fast_base = realish & (aq > 4000.0)

    def seeds(sig):
        fast = fast_base & (sig * sig < 1200.0 * np.maximum(wl.real, 1e-300))
        g, sc = _g_seed(sig, np.where(fast, 0.0, q))
        g = np.array(g if not all_real else g.real, dtype=dtype)
        sc = np.array(sc)
        if np.any(fast):
            wr = wl[fast].real
            logg = (gammaln(sig + 1.0) + np.log(ive(sig, wr))
                    + wr - sig * np.log(wr / 2.0))
            g[fast] = 1.0
            sc[fast] = logg
        return g, sc

    for f in np.unique(frac):
        idx = np.where(frac == f)[0]
        sg = sigmas[idx]
        nsteps = int(math.ceil(max(sig_top_req, sg[-1]) - sg[0])) + 1
        sig_top = sg[0] + nsteps
        g1, sc1 = seeds(sig_top + 1.0)
        g0, sc0 = seeds(sig_top)
        # bring both seeds onto a common scale register
        shift = sc1 - sc0
        g1 = g1 * np.exp(np.minimum(shift, 0.0))
        g0 = g0 * np.exp(np.minimum(-shift, 0.0))
        scale = np.maximum(sc0, sc1)
        # iteration j holds g at sigma = sig_top - j
        t_order = np.argsort(np.rint(sig_top - sg))
        t_js = np.rint(sig_top - sg).astype(np.int64)[t_order]
        t_is = idx[t_order]
        check = _check_interval(max(sig_top, aq_max))
        if all_real and _fast.HAVE_NUMBA:
            _fast.ladder_loop_real(
                np.ascontiguousarray(q), g0, g1, scale, float(sig_top),
                nsteps, t_js, t_is.astype(np.int64),
                gammaln(sigmas[t_is] + 1.0), (b * t_is).astype(np.float64),
                logw2, np.ascontiguousarray(resc), sub, check,
                _LADDER_RESCALE, _LOG_RESCALE)
            continue
        targets = {int(j): int(i) for j, i in zip(t_js, t_is)}
        s = sig_top
        for j in range(nsteps + 1):
            i = targets.get(j)
            if i is not None:
                logmag = b * i * logw2 + scale - gammaln(sigmas[i] + 1.0) - resc
                # fold |g0| into the exponent: neither factor alone need fit
                mag = np.abs(g0)
                ok = mag > 0
                phase = np.where(ok, g0 / np.where(ok, mag, 1.0), 0.0)
                logall = logmag + np.log(np.where(ok, mag, 1.0))
                if all_real:
                    sub[:, i] = phase * np.exp(logall)
                else:
                    sub[:, i] = phase * np.exp(logall + 1j * b * i * argw2)
            if j == nsteps:
                break
            g1, g0 = g0, g0 + (q / (s * (s + 1.0))) * g1
            if j % check == check - 1:
                big = np.abs(g0) > _LADDER_RESCALE
                if np.any(big):
                    g0[big] *= 1.0 / _LADDER_RESCALE
                    g1[big] *= 1.0 / _LADDER_RESCALE
                    scale[big] += _LOG_RESCALE
            s -= 1.0
    out[live] = sub
    return out


def series_m_needed(b, nu, w):
    """Series length adequate for |w| (scalar helper)."""
    need, _ = _sigma_need(np.asarray([complex(w)]))
    return int(math.ceil((float(need[0]) - b * nu) / b)) + 4


def itilde_stable(nu, w_vec):
    """Normalized I-Bessel itilde_nu on a vector of w, by the ladder.

    Unlike direct summation this stays accurate for large |Im w|, where
    the Taylor terms cancel by e^{|Im w|}.
    """
    w_vec = np.atleast_1d(np.asarray(w_vec, dtype=complex))
    return ladder_terms(1.0, nu, 0, w_vec)[:, 0]


def ikernel_grid(b, nu, w_vec, t_vec, scaled=False, m_max=None):
    """Kernel values on the product grid (w_i, t_j); the workhorse.

    The sum factors into (Bessel terms per w) @ (Gegenbauer rows per t),
    so one matrix product evaluates the whole grid.  ``scaled`` carries
    e^{-|Re w_i|} per row.
    """
    w_vec = np.atleast_1d(np.asarray(w_vec, dtype=complex))
    t_vec = np.atleast_1d(np.asarray(t_vec, dtype=float))
    if m_max is None:
        need, _ = _sigma_need(w_vec)
        m_max = int(math.ceil((float(np.max(need)) - b * nu) / b)) + 4
        m_max = max(m_max, 8)
    if m_max > _GRID_M_CAP:
        raise ConvergenceError(f"kernel series needs m_max = {m_max} > cap {_GRID_M_CAP}")
    A = ladder_terms(b, nu, m_max, w_vec, scaled=scaled)
    G = gegenbauer_norm_table(m_max, nu, t_vec)
    return gamma_fn(b * nu + 1.0) * (A @ G)


def ikernel_pairs(b, nu, w_vec, t_vec, scaled=False, chunk=4096, log_tail=41.5):
    """Elementwise kernel values at pairs (w_i, t_i) (sampler hot path).

    Pairs are processed in |w|-sorted chunks so each chunk's ladder depth
    is set by its own largest argument, not the batch maximum.  log_tail
    trades series depth for tail accuracy (the sampler's rejection step
    only needs ~1e-9 relative).
    """
    w_vec = np.atleast_1d(np.asarray(w_vec, dtype=complex))
    t_vec = np.atleast_1d(np.asarray(t_vec, dtype=float))
    order = np.argsort(np.abs(w_vec), kind="stable")
    out = np.empty(w_vec.size, dtype=complex)
    pref = gamma_fn(b * nu + 1.0)
    for lo in range(0, w_vec.size, chunk):
        idx = order[lo:min(lo + chunk, w_vec.size)]
        wc, tc = w_vec[idx], t_vec[idx]
        need, realish = _sigma_need(wc, log_tail)
        m_max = max(int(math.ceil((float(np.max(need)) - b * nu) / b)) + 4, 8)
        if m_max > _GRID_M_CAP:
            raise ConvergenceError(f"kernel series needs m_max = {m_max} > cap {_GRID_M_CAP}")
        A = ladder_terms(b, nu, m_max, wc, scaled=scaled)
        if _fast.HAVE_NUMBA and bool(np.all(realish)):
            acc = np.empty(idx.size)
            _fast.gegenbauer_dot_real(np.ascontiguousarray(A.real), float(nu),
                                      np.ascontiguousarray(tc), acc)
            out[idx] = pref * acc
        else:
            G = gegenbauer_norm_table(m_max, nu, tc)
            out[idx] = pref * np.einsum("im,mi->i", A, G)
    return out


def ikernel_series(args, tol=1e-15, m_cap=_SERIES_M_CAP):
    """Series route with the three-consecutive-small-terms stopping rule.

    Terms are accumulated until three consecutive ones fall below
    tol * |partial sum|; the error estimate is the magnitude of the last
    included term.  Hitting the cap (default 400, expected for large |w|)
    raises ConvergenceError.
    """
    if tol < 1e-15:
        raise DomainError("tol below 1e-15 is not resolvable in double precision")
    w = complex(args.w)
    if w == 0:
        return IKernelResult(1.0 + 0j, "series", 1, 0.0)
    m_needed = series_m_needed(args.b, args.nu, w)
    if m_needed > m_cap:
        raise ConvergenceError(
            f"series needs ~{m_needed} terms at |w| = {abs(w):.3g}, cap is {m_cap}"
        )
    A = ladder_terms(args.b, args.nu, m_needed, np.array([w]))[0]
    G = gegenbauer_norm_table(m_needed, args.nu, np.array([args.t]))[:, 0]
    pref = gamma_fn(args.b * args.nu + 1.0)
    total = 0.0 + 0j
    small = 0
    m_used = m_needed
    last = 0.0
    for m in range(m_needed + 1):
        term = A[m] * G[m]
        total += term
        last = abs(term)
        if m > 0 and last < tol * max(abs(total), 1e-300):
            small += 1
            if small == 3:
                m_used = m
                break
        else:
            small = 0
    return IKernelResult(pref * total, "series", m_used, pref * last)


def contour_node_budget(b, nu, aw, eps):
    """Circle node count: oscillation needs O(|w|) nodes and the
    near-singularity of the Gegenbauer generating factor at distance
    ~ b*eps from the path needs O(1/(b*eps))."""
    return max(256, int(math.ceil(8 * aw)), int(math.ceil((40.0 + 10.0 * abs(nu)) / (b * eps))))


def ikernel_contour(args, eps=None, nodes=None):
    """Loop-integral route.

    The path is the rotated ray-circle-ray loop; powers of z use the
    argument tracked continuously from -arg(w)-pi to -arg(w)+pi.  Default
    eps follows the large-|w| analysis (eps ~ 1/|w|, clipped for safety).
    """
    w = complex(args.w)
    if w == 0:
        raise DomainError("contour route needs w != 0")
    aw = abs(w)
    b, nu, t = args.b, args.nu, args.t
    if abs(w.real) > 690.0:
        raise ConvergenceError(
            "unscaled loop integrand overflows for |Re w| > 690; "
            "use ikernel_grid(..., scaled=True) in this regime")
    if eps is None:
        # eps |w| ~ 4 keeps the path-max factor at e^4 while standing
        # O(1/|w|) away from the generating-function singularity; the
        # large-|w| scaling matches the eps ~ 1/|w| envelope analysis
        eps = min(0.5, max(1e-3, 4.0 / aw))
    if eps <= 0:
        raise DomainError("eps must be positive")
    ncirc = nodes if nodes is not None else contour_node_budget(b, nu, aw, eps)
    z, dz, arg = _hankel_loop_nodes(w, eps, ncirc, 128)
    zb = _zpow(z, arg, -b)
    den = 1.0 - 2.0 * t * zb + zb * zb
    if np.min(np.abs(den)) < 1e-12:
        raise ConvergenceError(
            f"generating-function denominator within 1e-12 of zero on the path "
            f"(min {np.min(np.abs(den)):.2e}); increase eps"
        )
    integrand = (_zpow(z, arg, -b * nu - 1.0) * (1.0 - zb * zb)
                 * den ** (-(nu + 1.0)) * np.exp((w / 2.0) * (z + 1.0 / z)))
    val = np.sum(integrand * dz) / (2j * np.pi)
    pref = gamma_fn(b * nu + 1.0) * np.exp(-b * nu * np.log(w / 2.0))
    # quadrature error gauge: repeat the circle at half resolution
    z2, dz2, arg2 = _hankel_loop_nodes(w, eps, max(ncirc // 2, 64), 128)
    zb2 = _zpow(z2, arg2, -b)
    den2 = 1.0 - 2.0 * t * zb2 + zb2 * zb2
    integrand2 = (_zpow(z2, arg2, -b * nu - 1.0) * (1.0 - zb2 * zb2)
                  * den2 ** (-(nu + 1.0)) * np.exp((w / 2.0) * (z2 + 1.0 / z2)))
    val2 = np.sum(integrand2 * dz2) / (2j * np.pi)
    err = abs(pref) * abs(val - val2)
    return IKernelResult(pref * val, "contour", int(z.size), float(err))


def ikernel_contour_grid(b, nu, w, t_vec, eps=None, scaled=False):
    """Contour route vectorized over t at fixed w (oracle grids).

    With ``scaled`` the result carries e^{-|Re w|}, applied inside the
    exponential on the path so no overflow occurs for large real w.
    """
    w = complex(w)
    aw = abs(w)
    if eps is None:
        eps = min(0.5, max(1e-3, 4.0 / aw))
    t_vec = np.atleast_1d(np.asarray(t_vec, dtype=float))
    ncirc = contour_node_budget(b, nu, aw, eps)
    z, dz, arg = _hankel_loop_nodes(w, eps, ncirc, 128)
    zb = _zpow(z, arg, -b)
    resc = abs(w.real) if scaled else 0.0
    base = (_zpow(z, arg, -b * nu - 1.0) * (1.0 - zb * zb)
            * np.exp((w / 2.0) * (z + 1.0 / z) - resc) * dz)
    den = 1.0 - 2.0 * np.outer(t_vec, zb) + (zb * zb)[None, :]
    if np.min(np.abs(den)) < 1e-12:
        raise ConvergenceError("generating-function denominator too close to zero on the path")
    vals = (den ** (-(nu + 1.0))) @ base / (2j * np.pi)
    return gamma_fn(b * nu + 1.0) * np.exp(-b * nu * np.log(w / 2.0)) * vals


def ikernel(args, w_switch=20.0, cross_check=False):
    """Dispatcher between the series and contour routes.

    Complex arguments switch at |w| = w_switch: past it the series terms
    outgrow double precision before cancelling, while the rotated
    contour stays conditioned (its integrand is bounded by e^{|Re w|}).
    Real nonnegative arguments are the opposite case: the series terms
    are positive at every order (the ladder keeps them finite), whereas
    the contour cancels by e^{w}/|K|, so the series runs as far as its
    term cap allows.  In cross-check mode both routes run and the
    relative gap lands in err_estimate.
    """
    w = complex(args.w)
    if w == 0:
        return IKernelResult(1.0 + 0j, "series", 1, 0.0)
    if cross_check:
        rs = ikernel_series(args, m_cap=_GRID_M_CAP)
        rc = ikernel_contour(args)
        gap = abs(rs.value - rc.value) / max(abs(rs.value), 1e-300)
        return IKernelResult(rs.value, "series", rs.terms_or_nodes, gap)
    real_positive = abs(w.imag) <= 1e-12 * abs(w) and w.real >= 0
    if real_positive:
        if series_m_needed(args.b, args.nu, w) <= _SERIES_M_CAP:
            return ikernel_series(args)
        return ikernel_contour(args)
    if abs(w) <= w_switch:
        return ikernel_series(args)
    return ikernel_contour(args)


def growth_scan(b, nu, t, w_list, direction="imaginary-axis"):
    """|K| against the polynomial-exponential envelope along an axis.

    Returns rows (|w|, |K|, bound_ratio) where for |w| >= 2 the ratio
    divides out |w|^((2-b)nu + 2) e^{|Re w|} (the large-|w| envelope) and
    for small |w| the raw |K| is reported (expected bounded, -> 1).
    """
    if direction not in ("real-axis", "imaginary-axis"):
        raise DomainError(f"unknown direction {direction!r}")
    if list(w_list) != sorted(w_list):
        raise DomainError("w_list must be ascending")
    rows = []
    for aw in w_list:
        w = complex(aw) if direction == "real-axis" else -1j * aw
        if aw == 0:
            rows.append((0.0, 1.0, 1.0))
            continue
        res = ikernel(IKernelArgs(b, nu, w, t))
        mag = abs(res.value)
        if aw >= 2.0:
            ratio = mag / (aw ** ((2.0 - b) * nu + 2.0) * math.exp(abs(w.real)))
        else:
            ratio = mag
        rows.append((float(aw), float(mag), float(ratio)))
    return rows
