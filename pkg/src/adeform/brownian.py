"""Path sampling for the radially weighted diffusion, plus its MC checks.

One transition step from x over time dt draws y from the density
c_a h(x, y; dt) dy/|y|^(2-a).  In the coordinates S = |y|^a/a and
u = <x/|x|, y/|y|> the law factorizes:

  * radial: S/dt is a Poisson(R/dt) mixture of Gamma(lam+1+K) variables
    (R = |x|^a/a) -- sampled exactly; at the origin it is plain
    Gamma(lam+1, dt).
  * angular: u given S has density ~ K(b, nu, w, u) (1-u^2)^((N-3)/2)
    with w = 2 sqrt(RS)/dt -- sampled by inverse-CDF tables bucketed in
    w plus one rejection-correction step against the exact kernel.
  * the remaining direction is uniform on the ring orthogonal to x.

Streams are counter-based (Philox keyed by (seed, stream)), so identical
(seed, stream) reproduce identical paths and parallel workers get
independent randomness by construction.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError, SamplerError
from .ikernel import ikernel_grid, ikernel_pairs
from .kernels import DeformParams, PolarPoint
from .quad import gauss_legendre_panel

_REJECTION_CAP = 10_000
_ENVELOPE_MARGIN = 1.15


def make_rng(seed, stream):
    """Counter-based generator for one stream: Philox keyed by (seed, stream)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=int(seed),
                                                spawn_key=(int(stream),))))


# ---------------------------------------------------------------------------
# angular tables


def _angular_cells(params, w, n_core=112, n_tail=16):
    """Cell edges in theta = arccos(u) for the u | S proposal at one w.

    The measure (1-u^2)^((N-3)/2) du is (sin theta)^(N-2) d theta, smooth
    for every N >= 2.  Spacing is quadratic inside the kernel's
    O(b/sqrt(w)) concentration cone and uniform beyond it.
    """
    b = params.b
    if w < 5.0:
        return np.linspace(0.0, np.pi, n_core + n_tail + 1)
    # kernel scale: 1 - cos th ~ b^2 zeta / w with e^-zeta profile
    arg = min(1.0, math.sqrt(b * b * 45.0 / (2.0 * w)))
    th_core = min(math.pi, 2.0 * math.asin(arg))
    if th_core >= math.pi:
        return math.pi * np.sqrt(np.linspace(0.0, 1.0, n_core + n_tail + 1))
    core = th_core * np.sqrt(np.linspace(0.0, 1.0, n_core + 1))
    tail = np.linspace(th_core, np.pi, n_tail + 1)[1:]
    return np.concatenate([core, tail])


class AngularTables:
    """Proposal tables for u | S, one row per eighth-octave of w.

    The conditional angular law depends on the step only through
    w = 2 sqrt(R S)/tau, so one global ladder of tables serves every
    radius and step size.  A draw picks the nearest row, inverts its
    piecewise v^beta CDF (v = 1 - u), rescales v by w_row/w_true (the
    kernel scale is ~ b^2/w), and one rejection-correction step against
    the exact kernel removes all residual table bias.  Row envelopes are
    measured at build time across the row's w-assignment range.
    """

    PER_OCTAVE = 8
    N_CELLS = 128

    def __init__(self, params):
        self.params = params
        self.key_to_row = {}
        C = self.N_CELLS
        self.vp_edges = np.empty((0, C + 1))
        self.cum = np.empty((0, C + 1))
        self.qcoef = np.empty((0, C))
        self.env = np.empty((0, C))
        self.w_row = np.empty(0)
        self.rescaled = np.empty(0, dtype=bool)
        self.draws = 0
        self.accepts = 0

    def keys_for(self, w):
        lw = np.log2(np.clip(w, 1e-9, None))
        return np.clip(np.rint(self.PER_OCTAVE * lw), -self.PER_OCTAVE * 30,
                       self.PER_OCTAVE * 60).astype(int)

    def rows_for(self, w):
        keys = self.keys_for(w)
        missing = sorted(set(int(k) for k in np.unique(keys))
                         - set(self.key_to_row))
        if missing:
            self._build(missing)
        lut = self.key_to_row
        return np.array([lut[int(k)] for k in keys], dtype=int) \
            if len(lut) > 64 else np.vectorize(lut.get)(keys)

    def _build(self, keys):
        params = self.params
        b, nu, N = params.b, params.nu, params.N
        beta = (N - 3) / 2.0
        p = beta + 1.0
        C = self.N_CELLS
        gx, gw = np.polynomial.legendre.leggauss(3)
        w_new = 2.0 ** (np.asarray(keys, dtype=float) / self.PER_OCTAVE)
        th_edges = np.stack([_angular_cells(params, float(w), n_core=C - 16,
                                            n_tail=16) for w in w_new])
        widths = np.diff(th_edges, axis=1)
        th = th_edges[:, :-1, None] + widths[:, :, None] * (gx[None, None, :] + 1.0) / 2.0
        w_flat = np.repeat(w_new, C * gx.size)
        dens = ikernel_pairs(b, nu, w_flat, np.cos(th.ravel()), scaled=True,
                             log_tail=25.0).real
        dens = np.clip(dens, 0.0, None) * np.sin(th.ravel()) ** (N - 2)
        dens = dens.reshape(th.shape)
        K = len(keys)
        vp_edges = np.empty((K, C + 1)); cum = np.empty((K, C + 1))
        qcoef = np.empty((K, C)); env = np.empty((K, C))
        resc = w_new >= 5.0
        v_edges = 1.0 - np.cos(th_edges)
        lam_half = 2.0 ** (1.0 / (2.0 * self.PER_OCTAVE))
        for k in range(K):
            mass = (dens[k] @ gw) * widths[k] / 2.0
            total = float(np.sum(mass))
            cell_p = mass / max(total, 1e-300)
            vp_edges[k] = v_edges[k] ** p
            cum[k] = np.concatenate([[0.0], np.cumsum(cell_p)])
            cum[k, -1] = 1.0
            dvp = np.maximum(np.diff(vp_edges[k]), 1e-300)
            qcoef[k] = total * cell_p * p / dvp
            # envelope of K(w_true, 1 - v) (2-v)^beta lam^(beta+1) / qcoef
            # over the row's assignment range w_true = w_row / lam.  Cells
            # carrying < ~1e-12 of the mass sit below the kernel
            # evaluator's absolute noise floor and are excluded: they are
            # drawn with the same negligible probability.
            alive = cell_p > 1e-12 * float(np.max(cell_p))
            emax = np.zeros(C)
            for lam_f in (1.0 / lam_half, 1.0, lam_half):
                if resc[k]:
                    v_nodes = (1.0 - np.cos(th[k])) * lam_f
                else:
                    v_nodes = 1.0 - np.cos(th[k])
                ok = (v_nodes < 2.0) & alive[:, None]
                u_nodes = 1.0 - v_nodes
                Kv = ikernel_pairs(b, nu,
                                   np.full(int(np.sum(ok)), w_new[k] / lam_f),
                                   u_nodes[ok], scaled=True, log_tail=25.0).real
                Kv = np.clip(Kv, 0.0, None)
                resid = np.zeros_like(v_nodes)
                resid[ok] = Kv * (2.0 - v_nodes[ok]) ** beta \
                    * (lam_f ** p if resc[k] else 1.0)
                ratio = resid / np.maximum(qcoef[k][:, None], 1e-300)
                emax = np.maximum(emax, np.max(ratio, axis=1))
            # cells below the evaluator's noise floor inherit a safe cap
            # (they are drawn with the same negligible probability)
            fallback = 4.0 * float(np.max(emax[alive])) if np.any(alive) else 1.0
            emax[~alive] = np.maximum(emax[~alive], fallback)
            env[k] = _ENVELOPE_MARGIN * emax
        base = self.w_row.size
        self.vp_edges = np.vstack([self.vp_edges, vp_edges])
        self.cum = np.vstack([self.cum, cum])
        self.qcoef = np.vstack([self.qcoef, qcoef])
        self.env = np.vstack([self.env, env])
        self.w_row = np.concatenate([self.w_row, w_new])
        self.rescaled = np.concatenate([self.rescaled, resc])
        for j, key in enumerate(keys):
            self.key_to_row[int(key)] = base + j

    def draw_u(self, rng, rows, w_true):
        """One proposal per element: u plus its acceptance denominator."""
        x = rng.random(rows.size)
        cum = self.cum[rows]
        cell = np.sum(cum <= x[:, None], axis=1) - 1
        cell = np.clip(cell, 0, self.N_CELLS - 1)
        ar = np.arange(rows.size)
        pmass = cum[ar, cell + 1] - cum[ar, cell]
        frac = np.clip((x - cum[ar, cell]) / np.maximum(pmass, 1e-300), 0.0, 1.0)
        p = (self.params.N - 1) / 2.0
        vp_lo = self.vp_edges[rows, cell]
        vp_hi = self.vp_edges[rows, cell + 1]
        v = (vp_lo + frac * (vp_hi - vp_lo)) ** (1.0 / p)
        lam = np.where(self.rescaled[rows], self.w_row[rows] / w_true, 1.0)
        v = v * lam
        u = 1.0 - v
        denom = self.env[rows, cell] * self.qcoef[rows, cell] / lam ** p
        valid = v < 2.0
        return u, denom, valid


# spec-facing view of the tables for one (source radius, step) bucket


class KernelGrid:
    """Transition tables bound to one (source radius, step) pair.

    Rows sit on quantiles of the exact radial marginal (a Poisson
    mixture of Gammas); the angular inverse-CDF tables behind each row
    live in the shared per-octave ladder, since u | S depends on the
    row only through w = 2 sqrt(R S)/tau.
    """

    def __init__(self, params, r_ref, tau, n_s=256, tables=None):
        self.params = params
        self.r_ref = r_ref
        self.tau = tau
        a, lam = params.a, params.lambda_a
        R = r_ref ** a / a
        shape = lam + 1.0 + R / tau
        qs = np.linspace(1e-6, 1.0 - 1e-9, n_s - 24)
        S = stats.gamma.ppf(qs, a=shape, scale=tau)
        lo = S[0] * np.geomspace(0.01, 0.9, 12)
        hi = S[-1] * np.geomspace(1.1, 8.0, 12)
        self.S_mesh = np.concatenate([lo, S, hi])
        self.w_rows = 2.0 * np.sqrt(R * self.S_mesh) / tau
        self.tables = tables if tables is not None else AngularTables(params)

    def marginal_mass(self, n=512):
        """Integral of the radial marginal across the mesh range (~1)."""
        params, tau = self.params, self.tau
        a, lam = params.a, params.lambda_a
        R = self.r_ref ** a / a
        S, wq = gauss_legendre_panel(n, self.S_mesh[0], self.S_mesh[-1])
        w = 2.0 * np.sqrt(R * S) / tau
        it = ikernel_grid(1.0, lam, w, np.array([1.0]), scaled=True,
                          m_max=0)[:, 0].real / math.gamma(lam + 1.0)
        dens = np.exp(-(np.sqrt(R) - np.sqrt(S)) ** 2 / tau) * it \
            * S ** lam / tau ** (lam + 1.0)
        return float(np.sum(wq * dens))


# ---------------------------------------------------------------------------
# increment sampling


def _uniform_sphere(rng, n, N):
    g = rng.standard_normal((n, N))
    norm = np.linalg.norm(g, axis=1, keepdims=True)
    bad = norm[:, 0] < 1e-12
    while np.any(bad):
        g[bad] = rng.standard_normal((int(np.sum(bad)), N))
        norm = np.linalg.norm(g, axis=1, keepdims=True)
        bad = norm[:, 0] < 1e-12
    return g / norm


def _ring_directions(rng, omg):
    """Uniform directions orthogonal to each row of omg."""
    n, N = omg.shape
    g = rng.standard_normal((n, N))
    g -= np.sum(g * omg, axis=1, keepdims=True) * omg
    norm = np.linalg.norm(g, axis=1, keepdims=True)
    bad = norm[:, 0] < 1e-12
    while np.any(bad):
        nb = int(np.sum(bad))
        fresh = rng.standard_normal((nb, N))
        fresh -= np.sum(fresh * omg[bad], axis=1, keepdims=True) * omg[bad]
        g[bad] = fresh
        norm = np.linalg.norm(g, axis=1, keepdims=True)
        bad = norm[:, 0] < 1e-12
    return g / norm


def _angular_reject(params, tables, w, rng):
    """Draw u | w for each element: table proposal plus one
    rejection-correction step against the exact kernel density."""
    b, nu, N = params.b, params.nu, params.N
    beta = (N - 3) / 2.0
    rows = tables.rows_for(w)
    u = np.empty(w.size)
    pending = np.arange(w.size)
    attempts = 0
    while pending.size:
        attempts += 1
        if attempts > _REJECTION_CAP:
            raise SamplerError(f"angular rejection exceeded {_REJECTION_CAP} rounds")
        u_try, denom, valid = tables.draw_u(rng, rows[pending], w[pending])
        ratio = np.zeros(pending.size)
        if np.any(valid):
            K = ikernel_pairs(b, nu, w[pending][valid], u_try[valid],
                              scaled=True, log_tail=22.0).real
            K = np.clip(K, 0.0, None)
            # target over proposal: the within-cell v^beta factor cancels
            ratio[valid] = K * (1.0 + u_try[valid]) ** beta \
                / np.maximum(denom[valid], 1e-300)
        acc = rng.random(pending.size) < ratio
        tables.draws += pending.size
        tables.accepts += int(np.sum(acc))
        u[pending[acc]] = u_try[acc]
        pending = pending[~acc]
    return u


def _step_batch(params, pos, dt, rng, tables):
    """One transition for every row of pos (vectorized); returns new pos."""
    a, lam, N = params.a, params.lambda_a, params.N
    r = np.linalg.norm(pos, axis=1)
    R = r ** a / a
    K = rng.poisson(R / dt)
    S = rng.gamma(lam + 1.0 + K, dt)
    s_new = (a * S) ** (1.0 / a)
    out = np.empty_like(pos)
    at_origin = r < 1e-300
    n0 = int(np.sum(at_origin))
    if n0:
        out[at_origin] = s_new[at_origin, None] * _uniform_sphere(rng, n0, N)
    live = ~at_origin
    if not np.any(live):
        return out
    idx = np.where(live)[0]
    w = 2.0 * np.sqrt(R[idx] * S[idx]) / dt
    u = _angular_reject(params, tables, w, rng)
    omg = pos[idx] / r[idx, None]
    ring = _ring_directions(rng, omg)
    sint = np.sqrt(np.clip(1.0 - u ** 2, 0.0, None))
    direction = u[:, None] * omg + sint[:, None] * ring
    out[idx] = s_new[idx, None] * direction
    return out


@dataclass(frozen=True)
class PathSample:
    """One sampled path on a finite time grid, tagged with its RNG stream."""
    times: np.ndarray
    points: np.ndarray
    seed: int
    stream: int

    def __post_init__(self):
        if len(self.times) != len(self.points):
            raise DomainError("times and points must have equal length")


def sample_increment(params, x, dt, rng, tables=None):
    """One move from x over dt; y ~ c_a h(x, y; dt) dy/|y|^(2-a)."""
    if dt <= 0:
        raise DomainError("need dt > 0")
    xc = x.cartesian if isinstance(x, PolarPoint) else np.asarray(x, dtype=float)
    if tables is None:
        tables = AngularTables(params)
    new = _step_batch(params, xc[None, :], dt, rng, tables)[0]
    return PolarPoint.from_cartesian(new)


def sample_path(params, x0, times, seed, stream=0):
    """Iterated transitions on the given grid; deterministic in (seed, stream)."""
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise DomainError("times must ascend from 0")
    x0c = x0.cartesian if isinstance(x0, PolarPoint) else np.asarray(x0, dtype=float)
    rng = make_rng(seed, stream)
    tables = AngularTables(params)
    pts = np.empty((times.size, params.N))
    pts[0] = x0c
    for k in range(1, times.size):
        pts[k] = _step_batch(params, pts[k - 1][None, :], times[k] - times[k - 1],
                             rng, tables)[0]
    return PathSample(times=times, points=pts, seed=seed, stream=stream)


def simulate_endpoints(params, x0, t, n_paths, n_steps, seed, accumulate=None):
    """Endpoints of n_paths lockstep paths (and an optional running
    accumulator fed with each intermediate batch, for path functionals).

    Randomness comes from per-block Philox streams so runs are
    reproducible for fixed (seed, n_paths, n_steps) and blocks could be
    farmed out in parallel.
    """
    x0c = x0.cartesian if isinstance(x0, PolarPoint) else np.asarray(x0, dtype=float)
    tables = AngularTables(params)
    dt = t / n_steps
    block = 16384
    out = np.empty((n_paths, params.N))
    for bi, lo in enumerate(range(0, n_paths, block)):
        hi = min(lo + block, n_paths)
        rng = make_rng(seed, bi)
        pos = np.tile(x0c, (hi - lo, 1))
        if accumulate is not None:
            accumulate(bi, 0, pos)
        for k in range(n_steps):
            pos = _step_batch(params, pos, dt, rng, tables)
            if accumulate is not None:
                accumulate(bi, k + 1, pos)
        out[lo:hi] = pos
    return out


# ---------------------------------------------------------------------------
# MC checks


def radial_ks_statistic(params, t, n_samples, seed):
    """KS test of S = |B_t|^a/a from the origin against Gamma(lam+1, t)."""
    rng = make_rng(seed, 0)
    S = rng.gamma(params.lambda_a + 1.0, t, size=n_samples)
    # the origin draw is exact by construction; the test should confirm it
    return stats.kstest(S, stats.gamma(a=params.lambda_a + 1.0, scale=t).cdf)


def endpoint_ks_origin(params, t, n_samples, n_steps, seed):
    """KS test of the full sampler: |B_t|^a/a from 0 against Gamma(lam+1, t).

    With n_steps > 1 this also exercises the off-origin transitions,
    whose composition must reproduce the one-step law.
    """
    x0 = PolarPoint.from_cartesian(np.zeros(params.N))
    pts = simulate_endpoints(params, x0, t, n_samples, n_steps, seed)
    S = np.linalg.norm(pts, axis=1) ** params.a / params.a
    return stats.kstest(S, stats.gamma(a=params.lambda_a + 1.0, scale=t).cdf)


def moment_check_mc(params, x, t, n_paths, n_steps, seed, m=1):
    """E_x |B_t|^{ma} against the closed-form moment flow, with its 3 sigma."""
    from .kernels import moment_flow_f
    pts = simulate_endpoints(params, x, t, n_paths, n_steps, seed)
    vals = np.linalg.norm(pts, axis=1) ** (m * params.a)
    est = float(np.mean(vals))
    sig = float(np.std(vals, ddof=1) / math.sqrt(n_paths))
    xr = x.r if isinstance(x, PolarPoint) else float(np.linalg.norm(x))
    closed = moment_flow_f(params, m, t, xr ** params.a)
    return est, sig, closed


@dataclass(frozen=True)
class ShellCapBox:
    """Borel box {r_lo <= |y| < r_hi} x {u_lo <= <axis, y/|y|> < u_hi}."""
    r_lo: float
    r_hi: float
    u_lo: float = -1.0
    u_hi: float = 1.0


def box_mass_quadrature(params, x, T, box, n=96):
    """c_a Int_box h(x, y; T) dy/|y|^(2-a) by tensor Gauss-Legendre.

    The box axis is taken along x (or anywhere for x = 0).
    """
    a, lam = params.a, params.lambda_a
    xr = x.r if isinstance(x, PolarPoint) else float(np.linalg.norm(x))
    R = xr ** a / a
    S_lo, S_hi = box.r_lo ** a / a, box.r_hi ** a / a
    S, wS = gauss_legendre_panel(n, S_lo, S_hi)
    u, wu = gauss_legendre_panel(n, box.u_lo, box.u_hi)
    beta = (params.N - 3) / 2.0
    w = 2.0 * np.sqrt(R * S) / T
    kern = ikernel_grid(params.b, params.nu, w, u, scaled=True).real
    ang = kern @ (wu * (1.0 - u ** 2) ** beta)
    from .quad import sphere_volume
    radial = np.exp(-(math.sqrt(R) - np.sqrt(S)) ** 2 / T) * S ** lam
    pref = params.c_a * a ** lam * T ** (-(lam + 1.0)) * sphere_volume(params.N - 1) \
        if params.N >= 3 else params.c_a * a ** lam * T ** (-(lam + 1.0)) * 2.0
    return pref * float((wS * radial) @ ang)


def chapman_kolmogorov_mc(params, x, t1, t2, boxes, n_paths, seed, n_steps=(1, 1)):
    """Two-step empirical box masses against one-step quadrature masses.

    Returns rows (empirical, closed, binomial sigma) per box.
    """
    x0 = x if isinstance(x, PolarPoint) else PolarPoint.from_cartesian(x)
    tables = AngularTables(params)
    block = 16384
    axis = np.asarray(x0.omega) if x0.r > 0 else np.eye(params.N)[0]
    counts = np.zeros(len(boxes))
    done = 0
    bi = 0
    while done < n_paths:
        nb = min(block, n_paths - done)
        rng = make_rng(seed, bi)
        pos = np.tile(x0.cartesian, (nb, 1))
        for _ in range(n_steps[0]):
            pos = _step_batch(params, pos, t1 / n_steps[0], rng, tables)
        for _ in range(n_steps[1]):
            pos = _step_batch(params, pos, t2 / n_steps[1], rng, tables)
        rr = np.linalg.norm(pos, axis=1)
        uu = np.where(rr > 0, pos @ axis / np.maximum(rr, 1e-300), 0.0)
        for j, bx in enumerate(boxes):
            inside = (rr >= bx.r_lo) & (rr < bx.r_hi) & (uu >= bx.u_lo) & (uu < bx.u_hi)
            counts[j] += int(np.sum(inside))
        done += nb
        bi += 1
    rows = []
    for j, bx in enumerate(boxes):
        emp = counts[j] / n_paths
        closed = box_mass_quadrature(params, x0, t1 + t2, bx)
        sig = math.sqrt(max(closed * (1 - closed), 1e-12) / n_paths)
        rows.append((emp, closed, sig))
    return rows


def continuity_moment_mc(params, x, s, t_list, n_paths, seed, m_exponent=None):
    """E[ |r^{ma} omega - s^{ma} mu|^4 ] across the step sizes in t_list.

    m defaults to the smallest integer with m*a >= 2.  Returns rows
    (t, mean, stderr) and the fitted log-log slope (expected ~2).
    """
    a = params.a
    m = m_exponent if m_exponent is not None else max(1, math.ceil(2.0 / a - 1e-12))
    x0 = x if isinstance(x, PolarPoint) else PolarPoint.from_cartesian(x)
    tables = AngularTables(params)
    rng = make_rng(seed, 0)
    base = np.tile(x0.cartesian, (n_paths, 1))
    base = _step_batch(params, base, s, rng, tables)
    rows = []
    for k, t in enumerate(t_list):
        rng_t = make_rng(seed, 1000 + k)
        nxt = _step_batch(params, base.copy(), t, rng_t, tables)
        rb = np.linalg.norm(base, axis=1) ** (m * a)
        rn = np.linalg.norm(nxt, axis=1) ** (m * a)
        ob = base / np.maximum(np.linalg.norm(base, axis=1), 1e-300)[:, None]
        on = nxt / np.maximum(np.linalg.norm(nxt, axis=1), 1e-300)[:, None]
        alpha4 = np.linalg.norm(rb[:, None] * ob - rn[:, None] * on, axis=1) ** 4
        rows.append((float(t), float(np.mean(alpha4)),
                     float(np.std(alpha4, ddof=1) / math.sqrt(n_paths))))
    logs = np.log([r[0] for r in rows])
    vals = np.log([max(r[1], 1e-300) for r in rows])
    slope = float(np.polyfit(logs, vals, 1)[0])
    return rows, slope


def feynman_kac_estimate(params, V, f, x, t, n_paths, n_steps, seed):
    """E_x[ exp(-Int_0^t V(B_s) ds) f(B_t) ] with the integral by trapezoid.

    V and f take (n, N) position arrays.  Returns (estimate, stderr).
    """
    if n_steps < 16:
        raise DomainError("need n_steps >= 16")
    dt = t / n_steps
    sums = []

    class _Acc:
        def __init__(self):
            self.vsum = None

        def __call__(self, bi, k, pos):
            v = np.asarray(V(pos), dtype=float)
            if k == 0:
                self.vsum = 0.5 * v
            elif k == n_steps:
                self.vsum += 0.5 * v
                sums.append((self.vsum * dt, pos.copy()))
            else:
                self.vsum += v

    acc = _Acc()
    simulate_endpoints(params, x, t, n_paths, n_steps, seed, accumulate=acc)
    vals = np.concatenate([np.exp(-vs) * np.asarray(f(pos), dtype=float)
                           for vs, pos in sums])
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(len(vals)))


def semigroup_property_mc(params, V, f, x, t, s, n_paths, seed,
                          inner_grid=(16, 9), inner_paths=4000):
    """Gap between T_{t+s} f and T_t(T_s f), nested MC on both sides.

    The inner T_s f is estimated on a zonal (radius, cosine) grid with
    fresh streams and interpolated; the quoted sigma combines the outer
    error with the worst inner-node error.
    """
    lhs, lhs_sig = feynman_kac_estimate(params, V, f, x, t + s, n_paths,
                                        max(16, int(64 * (t + s))) , seed)
    x0 = x if isinstance(x, PolarPoint) else PolarPoint.from_cartesian(x)
    axis = np.asarray(x0.omega) if x0.r > 0 else np.eye(params.N)[0]
    # inner grid in (radius, cosine to axis)
    pts = simulate_endpoints(params, x0, t, 4096, max(16, int(64 * t)), seed + 1)
    r_hi = float(np.quantile(np.linalg.norm(pts, axis=1), 0.999) * 1.5)
    radii = np.linspace(0.0, r_hi, inner_grid[0])
    cosines = np.linspace(-1.0, 1.0, inner_grid[1])
    gvals = np.zeros((radii.size, cosines.size))
    gsigs = np.zeros_like(gvals)
    for i, rad in enumerate(radii):
        for j, c in enumerate(cosines):
            perp = np.eye(params.N)[1] if abs(axis[0]) > 0.5 else np.eye(params.N)[0]
            perp = perp - (perp @ axis) * axis
            perp /= np.linalg.norm(perp)
            y = rad * (c * axis + math.sqrt(max(0.0, 1 - c * c)) * perp)
            est, sig = feynman_kac_estimate(params, V, f, PolarPoint.from_cartesian(y),
                                            s, inner_paths, max(16, int(64 * s)),
                                            seed + 7919 * (i * cosines.size + j + 1))
            gvals[i, j] = est
            gsigs[i, j] = sig
    from scipy.interpolate import RegularGridInterpolator
    interp = RegularGridInterpolator((radii, cosines), gvals, bounds_error=False,
                                     fill_value=None)

    def g(pos):
        rr = np.linalg.norm(pos, axis=1)
        cc = np.where(rr > 0, pos @ axis / np.maximum(rr, 1e-300), 0.0)
        return interp(np.stack([np.clip(rr, 0, r_hi), cc], axis=-1))

    rhs, rhs_sig = feynman_kac_estimate(params, V, g, x0, t, n_paths,
                                        max(16, int(64 * t)), seed + 2)
    sig = math.sqrt(lhs_sig ** 2 + rhs_sig ** 2 + float(np.max(gsigs)) ** 2)
    return lhs, rhs, abs(lhs - rhs), sig


# ---------------------------------------------------------------------------
# artifact writers (external formats)


def write_paths_csv(path, samples):
    """Path dump: columns stream, step, t, x_1..x_N (RFC-4180, '.' decimals)."""
    N = samples[0].points.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["stream", "step", "t"] + [f"x_{d+1}" for d in range(N)])
        for sm in samples:
            for k, (tv, pt) in enumerate(zip(sm.times, sm.points)):
                wr.writerow([sm.stream, k, f"{tv:.17g}"]
                            + [f"{v:.17g}" for v in pt])


def estimator_report(estimate, stderr, n_paths, n_steps, seed, extra=None):
    """JSON-ready record for one MC estimate."""
    rec = {"estimate": estimate, "stderr": stderr, "n_paths": n_paths,
           "n_steps": n_steps, "seed": seed}
    if extra:
        rec.update(extra)
    return rec


def write_estimator_json(path, records):
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2)
        fh.write("\n")
