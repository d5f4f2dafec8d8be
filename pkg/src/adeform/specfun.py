"""Scalar special functions: gamma, normalized Bessel, Gegenbauer, Laguerre.

The "normalized" Bessel variants have the (w/2)^nu prefactor removed and
are entire in w:

    itilde_nu(w) = sum_m (w/2)^{2m} / (m! Gamma(nu+m+1))
    jtilde_nu(w) = sum_m (-1)^m (w/2)^{2m} / (m! Gamma(nu+m+1))

Normalized Gegenbauer polynomials are the coefficients of

    (1 - x^2) / (1 - 2tx + x^2)^(nu+1) = sum_m gegenbauer_norm(m, nu, t) x^m

and relate to the plain ones by gegenbauer_norm = ((m+nu)/nu) * gegenbauer
for nu != 0.
"""

import math

import numpy as np

from .errors import PoleError, SeriesCapError, ConvergenceError
from .quad import gauss_jacobi, gauss_legendre_panel, sphere_volume, subsphere_rule

_SERIES_TOL = 1e-16
_SERIES_CAP = 500
_RAY_DECAY_CUTOFF = 1e-22


def pochhammer(x, n):
    """Rising factorial (x)_n = x (x+1) ... (x+n-1); (x)_0 = 1."""
    out = 1.0
    for k in range(n):
        out *= x + k
    return out


def gamma_fn(x):
    """Gamma(x) for real x, accurate to >= 12 significant digits.

    Backed by the C library's Lanczos/Stirling implementation; x < 0.5
    goes through the reflection formula internally.  Nonpositive integers
    are poles and raise instead of returning inf.
    """
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"gamma pole at x = {x}")
    return math.gamma(x)


def reciprocal_gamma_contour(z, contour_radius=1.0, nodes=64):
    """1/Gamma(z) by quadrature of a loop integral around the positive real axis.

    The path runs in from +infinity below the axis, counterclockwise
    around a circle of radius ``contour_radius``, and back out above the
    axis; the integrand is e^{-t} (-t)^{-z} with arg(-t) in (-pi, pi].
    Serves as an independent oracle for gamma_fn.

    Parameters
    ----------
    z : real
    contour_radius : float, circle radius (> 0)
    nodes : int, Gauss-Legendre nodes per ray panel (>= 64)
    """
    if contour_radius <= 0:
        raise ValueError("contour_radius must be positive")
    if nodes < 64:
        raise ValueError("need nodes >= 64")
    R = contour_radius
    # truncate rays where e^{-r} r^{-Re z} is negligible
    rmax = 60.0 + 3.0 * abs(z) + R
    rmid = R + 0.1 * (rmax - R)
    rseg = []
    for a, b in ((R, rmid), (rmid, rmax)):
        r, w = gauss_legendre_panel(nodes, a, b)
        rseg.append((r, w))
    r = np.concatenate([s[0] for s in rseg])
    wr = np.concatenate([s[1] for s in rseg])
    ray = np.sum(np.exp(-r) * r ** (-z) * wr)
    rays = (np.exp(-1j * np.pi * z) - np.exp(1j * np.pi * z)) * ray
    th, wth = gauss_legendre_panel(2 * nodes, 0.0, 2 * np.pi)
    circ = 1j * R * np.sum(
        np.exp(-R * np.exp(1j * th)) * R ** (-z) * np.exp(-1j * (th - np.pi) * z)
        * np.exp(1j * th) * wth
    )
    tail = math.exp(-rmax) * rmax ** (-z if z < 0 else 0.0)
    val = (1j / (2 * np.pi)) * (rays + circ)
    # 1/Gamma is O(1)-scaled and has genuine zeros, so the tail test is
    # absolute
    if tail > 1e-15 * max(abs(val), 1.0):
        raise ConvergenceError(
            f"ray truncation at r = {rmax:.1f} leaves tail ~ {tail:.2e}"
        )
    return float(val.real)


def _bessel_series(nu, w, signed):
    """Shared series loop for itilde/jtilde with the three-small-terms rule."""
    if nu <= -1:
        raise PoleError(f"normalized Bessel needs nu > -1, got nu = {nu}")
    w = complex(w)
    q = (w / 2.0) ** 2
    if signed:
        q = -q
    term = 1.0 / gamma_fn(nu + 1.0)
    total = term
    small = 0
    for m in range(1, _SERIES_CAP + 1):
        prev = abs(term)
        term = term * q / (m * (nu + m))
        total += term
        if not np.isfinite(abs(total)):
            raise SeriesCapError(
                "Bessel series overflowed before converging", prev)
        if abs(term) < _SERIES_TOL * abs(total):
            small += 1
            if small == 3:
                return total
        else:
            small = 0
    raise SeriesCapError(f"Bessel series hit cap m = {_SERIES_CAP}", abs(term))


def bessel_i_norm(order, w):
    """Normalized I-Bessel itilde_nu(w), entire in w, by direct summation.

    Terms are all positive for real w.  For complex w with a large
    imaginary part the sum cancels by ~ e^{|Im w|}, which costs digits;
    the kernel-series engine has a stable route for that regime.
    """
    return _bessel_series(float(order), w, signed=False)


def bessel_j_norm(order, w):
    """Normalized Bessel jtilde_nu(w) = itilde_nu(iw), alternating series."""
    return _bessel_series(float(order), w, signed=True)


def _hankel_loop_nodes(w, eps, nodes_circle, nodes_ray):
    """Loop path of radius 1+eps rotated by -arg(w): z values, dz weights
    and the continuously tracked arg(z) along ray-circle-ray."""
    alpha = np.angle(w)
    rho = 1.0 + eps
    aw = abs(w)
    # rays: |exp((w/2)(z + 1/z))| = exp(-|w| (r - 1/r) / 2); truncate at the
    # radius where that factor drops below _RAY_DECAY_CUTOFF relative
    c = 2.0 * (-np.log(_RAY_DECAY_CUTOFF)) / aw
    rmax = max(0.5 * (c + np.sqrt(c * c + 4.0)), 1.5 * rho)
    umax = np.log(rmax / rho)
    half = nodes_ray // 2
    useg = []
    for a, b in ((0.0, 0.25 * umax), (0.25 * umax, umax)):
        u, wu = gauss_legendre_panel(max(half, 8), a, b)
        useg.append((u, wu))
    u = np.concatenate([s[0] for s in useg])
    wu = np.concatenate([s[1] for s in useg])
    r = rho * np.exp(u)
    dr = r * wu  # dr = r du on the log grid
    th, wth = gauss_legendre_panel(nodes_circle, -alpha - np.pi, -alpha + np.pi)

    z_in = r * np.exp(1j * (-alpha - np.pi))
    z_c = rho * np.exp(1j * th)
    z_out = r * np.exp(1j * (-alpha + np.pi))
    z = np.concatenate([z_in, z_c, z_out])
    dz = np.concatenate([
        -np.exp(1j * (-alpha - np.pi)) * dr,   # inbound: r from rmax to rho
        1j * rho * np.exp(1j * th) * wth,
        np.exp(1j * (-alpha + np.pi)) * dr,
    ])
    arg = np.concatenate([np.full_like(r, -alpha - np.pi), th,
                          np.full_like(r, -alpha + np.pi)])
    return z, dz, arg


def _zpow(z, arg, p):
    """z^p with the tracked (non-principal) argument."""
    return np.exp(p * (np.log(np.abs(z)) + 1j * arg))


def bessel_i_norm_contour(order, w, eps=0.5, nodes=256):
    """itilde_nu(w) by quadrature of the rotated loop integral.

    Evaluates (w/2)^{-nu} (1/2 pi i) Int z^{-nu-1} e^{(w/2)(z+1/z)} dz over
    the ray-circle-ray path; the (w/2)^{-nu} factor converts the loop
    representation of I_nu into the normalized function (the series is
    the defining normalization and the oracle for this routine).
    """
    nu = float(order)
    w = complex(w)
    if w == 0:
        raise ValueError("contour form needs w != 0 (series handles w = 0)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    ncirc = max(nodes, int(np.ceil(8 * abs(w))))
    z, dz, arg = _hankel_loop_nodes(w, eps, ncirc, 128)
    integrand = _zpow(z, arg, -nu - 1.0) * np.exp((w / 2.0) * (z + 1.0 / z))
    val = np.sum(integrand * dz) / (2j * np.pi)
    return val * np.exp(-nu * np.log(w / 2.0))


def gegenbauer(index_m, nu, t):
    """Plain Gegenbauer polynomial C^nu_m(t) by the three-term recurrence.

    m C_m = 2t (m+nu-1) C_{m-1} - (m+2nu-2) C_{m-2},  C_0 = 1, C_1 = 2 nu t.
    O(m), stable on [-1, 1]; validated against generating-function Taylor
    coefficients in the tests.
    """
    m = int(index_m)
    if m < 0:
        raise ValueError("degree m must be >= 0")
    if abs(t) > 1 + 1e-12:
        raise ValueError("need |t| <= 1")
    if m == 0:
        return 1.0
    c_prev, c = 1.0, 2.0 * nu * t
    for k in range(2, m + 1):
        c_prev, c = c, (2.0 * t * (k + nu - 1) * c - (k + 2 * nu - 2) * c_prev) / k
    return c


def gegenbauer_norm(index_m, nu, t):
    """Normalized Gegenbauer polynomial.

    ((m+nu)/nu) C^nu_m(t) for nu != 0; the nu = 0 limit of the generating
    function gives the Chebyshev form 2 cos(m arccos t) (and 1 at m = 0),
    which covers the two-dimensional case where the relation is singular.
    """
    m = int(index_m)
    if m < 0:
        raise ValueError("degree m must be >= 0")
    if m == 0:
        return 1.0
    if nu == 0.0:
        return 2.0 * math.cos(m * math.acos(max(-1.0, min(1.0, t))))
    return (m + nu) / nu * gegenbauer(m, nu, t)


def gegenbauer_norm_table(m_max, nu, t):
    """Matrix of gegenbauer_norm(m, nu, t_j) for m = 0..m_max (vectorized)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((m_max + 1, t.size))
    out[0] = 1.0
    if m_max == 0:
        return out
    if nu == 0.0:
        th = np.arccos(np.clip(t, -1.0, 1.0))
        out[1:] = 2.0 * np.cos(np.outer(np.arange(1, m_max + 1), th))
        return out
    c_prev = np.ones_like(t)
    c = 2.0 * nu * t
    out[1] = (1 + nu) / nu * c
    for m in range(2, m_max + 1):
        c_prev, c = c, (2.0 * t * (m + nu - 1) * c - (m + 2 * nu - 2) * c_prev) / m
        out[m] = (m + nu) / nu * c
    return out


def laguerre(ell, lam, x):
    """Generalized Laguerre polynomial L^(lam)_ell(x) as its explicit sum.

    L^(lam)_l(x) = ((lam+1)_l / l!) sum_j ((-l)_j / (lam+1)_j) x^j / j!
    Exact finite sum; lam > -1 required for the orthogonality weight.
    """
    ell = int(ell)
    if lam <= -1:
        raise ValueError("need lam > -1")
    x = np.asarray(x, dtype=float)
    coef = pochhammer(lam + 1.0, ell) / math.factorial(ell)
    term = np.ones_like(x)
    total = term.copy()
    for j in range(1, ell + 1):
        term = term * ((-ell + j - 1) / (lam + j)) * x / j
        total += term
    out = coef * total
    return out if out.ndim else float(out)


def zonal(m, N, u):
    """Degree-m zonal kernel on S^{N-1}: gegenbauer_norm at nu = (N-2)/2.

    Reproducing kernel of the degree-m spherical harmonics under the
    normalized surface measure.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    return gegenbauer_norm(m, (N - 2) / 2.0, u)


def zonal_sphere_average(m, mprime, N, omega_dot_eta, n_nodes=64):
    """(1/vol) Int P_m(<omega, mu>) P_m'(<mu, eta>) d mu over mu in S^{N-1}.

    Quadrature realization of the zonal product average used by the
    reproducing-property checks; omega_dot_eta = <omega, eta>.
    """
    g = float(omega_dot_eta)
    sing = math.sqrt(max(0.0, 1.0 - g * g))
    beta = (N - 3) / 2.0
    u1, w1 = gauss_jacobi(n_nodes, beta, beta)
    u2, w2 = subsphere_rule(N, n_nodes)
    # <mu, eta> with the pole at omega: g u1 + sqrt(1-g^2) sqrt(1-u1^2) u2
    inner = g * u1[:, None] + sing * np.sqrt(1 - u1[:, None] ** 2) * u2[None, :]
    nu = (N - 2) / 2.0
    pm = gegenbauer_norm_table(m, nu, u1)[m]
    pmp = gegenbauer_norm_table(mprime, nu, inner.ravel())[mprime].reshape(inner.shape)
    total = np.einsum("i,ij,i,j->", pm, pmp, w1, w2)
    return total / sphere_volume(N)
