"""Optional numba kernels for the sampler's two inner loops.

Everything here has a pure-numpy twin; the jitted versions only run for
float64 inputs (real kernel arguments, the Monte Carlo hot path).  If
numba is unavailable the package works unchanged, a few times slower in
the samplers.
"""

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:          # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap


@njit(cache=True)
def ladder_loop_real(q, g0, g1, scale, sig_top, nsteps, t_js, t_ms, lgam,
                     bms, logw2, resc, sub, check, rescale, log_rescale):
    """Downward order-ladder over unit steps with periodic rescaling.

    Extracts sub[e, m] = sign(g) * exp(bm*logw2 + scale - lgamma - resc
    + log|g|) at the target iterations t_js (ascending).
    """
    n = g0.size
    s = sig_top
    tp = 0
    for j in range(nsteps + 1):
        if tp < t_js.size and j == t_js[tp]:
            m_i = t_ms[tp]
            for e in range(n):
                g = g0[e]
                if g == 0.0:
                    sub[e, m_i] = 0.0
                else:
                    mag = abs(g)
                    val = math.exp(bms[tp] * logw2[e] + scale[e] - lgam[tp]
                                   - resc[e] + math.log(mag))
                    sub[e, m_i] = val if g > 0 else -val
            tp += 1
        if j == nsteps:
            break
        c = 1.0 / (s * (s + 1.0))
        for e in range(n):
            tmp = g0[e]
            g0[e] = tmp + q[e] * c * g1[e]
            g1[e] = tmp
        if j % check == check - 1:
            for e in range(n):
                if abs(g0[e]) > rescale:
                    g0[e] /= rescale
                    g1[e] /= rescale
                    scale[e] += log_rescale
        s -= 1.0


@njit(cache=True)
def gegenbauer_dot_real(A, nu, t, out):
    """out[e] = sum_m A[e, m] * gegenbauer_norm(m, nu, t[e]) in one pass."""
    n, m1 = A.shape
    for e in range(n):
        te = t[e]
        acc = A[e, 0]
        if m1 > 1:
            if nu == 0.0:
                tc = te
                if tc > 1.0:
                    tc = 1.0
                if tc < -1.0:
                    tc = -1.0
                th = math.acos(tc)
                for m in range(1, m1):
                    acc += A[e, m] * 2.0 * math.cos(m * th)
            else:
                c_prev = 1.0
                c = 2.0 * nu * te
                acc += A[e, 1] * (1.0 + nu) / nu * c
                for m in range(2, m1):
                    c_new = (2.0 * te * (m + nu - 1.0) * c
                             - (m + 2.0 * nu - 2.0) * c_prev) / m
                    c_prev = c
                    c = c_new
                    acc += A[e, m] * (m + nu) / nu * c
        out[e] = acc
