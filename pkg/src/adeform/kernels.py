"""Deformation context and the closed-form integral kernels.

All kernels live on R^N with the radially weighted measure
dy / |y|^(2-a) and are built from the Bessel-Gegenbauer series kernel
K(b, nu, w, t) with b = 2/a, nu = (N-2)/2:

    fourier kernel   B(r omega, s mu)    = K(b, nu, -2i (rs)^{a/2}/a, <omega,mu>)
    heat kernel      h(r omega, s mu; t) = t^{-(lam+1)} e^{-(r^a+s^a)/(at)}
                                           * K(b, nu, 2 (rs)^{a/2}/(at), <omega,mu>)
    semigroup kernel for Re z > 0, via  coth/sinh  in place of  1/t.

Here lam = (N-2)/a, and the normalization c_a makes the heat kernel a
transition density.  At a = 2 everything collapses to the classical
Gaussian objects.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .ikernel import (IKernelArgs, ikernel, ikernel_grid, ikernel_pairs,
                      itilde_stable)
from .quad import (gauss_genlaguerre, gauss_jacobi, sphere_product_rule,
                   sphere_volume, subsphere_rule)
from .specfun import gamma_fn, laguerre, zonal


@dataclass(frozen=True)
class DeformParams:
    """Deformation context (a, N) and its derived constants.

    Requires a > max(0, 2-N) and N >= 2.
    """
    a: float
    N: int
    lambda_a: float = field(init=False)
    nu: float = field(init=False)
    c_a: float = field(init=False)
    M: float = field(init=False)

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"need N >= 2, got N = {self.N}")
        if not self.a > max(0.0, 2.0 - self.N):
            raise DomainError(
                f"need a > max(0, 2-N) = {max(0.0, 2.0 - self.N)}, got a = {self.a}"
            )
        lam = (self.N - 2.0) / self.a
        object.__setattr__(self, "lambda_a", lam)
        object.__setattr__(self, "nu", (self.N - 2.0) / 2.0)
        object.__setattr__(self, "c_a", 1.0 / (
            self.a ** lam * gamma_fn(lam + 1.0) * sphere_volume(self.N)))
        object.__setattr__(self, "M", (self.a - 1.0) * (self.N - 2.0) / 2.0 + self.a)

    @property
    def b(self):
        return 2.0 / self.a

    def lambda_am(self, m):
        """(N + 2m - 2)/a, the radial order of the degree-m sector."""
        if m < 0:
            raise DomainError("need m >= 0")
        return (self.N + 2.0 * m - 2.0) / self.a

    def radial_S(self, r):
        """The radial variable S = r^a / a."""
        return np.asarray(r, dtype=float) ** self.a / self.a


def lambda_am(params, m):
    return params.lambda_am(m)


@dataclass(frozen=True)
class PolarPoint:
    """Point r * omega with |omega| = 1 (within 1e-12) and r >= 0."""
    r: float
    omega: tuple

    def __post_init__(self):
        if self.r < 0:
            raise DomainError("radius must be >= 0")
        w = np.asarray(self.omega, dtype=float)
        if abs(np.linalg.norm(w) - 1.0) > 1e-12:
            raise DomainError("direction must be a unit vector")
        object.__setattr__(self, "omega", tuple(float(v) for v in w))

    @classmethod
    def from_cartesian(cls, x):
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            e = np.zeros(x.size)
            e[0] = 1.0
            return cls(0.0, tuple(e))
        return cls(r, tuple(x / r))

    @property
    def cartesian(self):
        return self.r * np.asarray(self.omega)

    def cos_angle(self, other):
        return float(np.clip(np.dot(self.omega, other.omega), -1.0, 1.0))


@dataclass(frozen=True)
class KernelEval:
    """Kernel value with evaluation metadata (for reporting surfaces)."""
    value: complex
    method: str
    terms_or_nodes: int
    err_estimate: float


def fourier_kernel(params, x, y):
    """Integral kernel of the deformed Fourier transform at (x, y).

    K at w = -2i (rs)^{a/2} / a; reduces to e^{-i <x, y>} at a = 2.
    """
    a = params.a
    w = -2j * (x.r * y.r) ** (a / 2.0) / a
    return ikernel(IKernelArgs(params.b, params.nu, w, x.cos_angle(y))).value


def heat_kernel_grid(params, r, s_vec, u_vec, t):
    """Heat kernel on the product grid (s_i, u_j) from source radius r.

    Evaluated in the overflow-safe split
        t^{-(lam+1)} exp(-(sqrt(R)-sqrt(S))^2 / t) * [e^{-w} K(w, u)]
    with w = 2 sqrt(R S)/t, R = r^a/a, S = s^a/a.
    """
    if t <= 0:
        raise DomainError("need t > 0")
    a, lam = params.a, params.lambda_a
    s_vec = np.atleast_1d(np.asarray(s_vec, dtype=float))
    R = r ** a / a
    S = s_vec ** a / a
    w = 2.0 * np.sqrt(R * S) / t
    kern = ikernel_grid(params.b, params.nu, w, u_vec, scaled=True).real
    pref = t ** (-(lam + 1.0)) * np.exp(-((math.sqrt(R) - np.sqrt(S)) ** 2) / t)
    return pref[:, None] * kern


def heat_kernel_pairs(params, r_vec, s_vec, u_vec, t):
    """Heat kernel at elementwise triples (r_i, s_i, u_i) (sampler path)."""
    a, lam = params.a, params.lambda_a
    R = np.asarray(r_vec, dtype=float) ** a / a
    S = np.asarray(s_vec, dtype=float) ** a / a
    w = 2.0 * np.sqrt(R * S) / t
    kern = ikernel_pairs(params.b, params.nu, w, u_vec, scaled=True).real
    return t ** (-(lam + 1.0)) * np.exp(-((np.sqrt(R) - np.sqrt(S)) ** 2) / t) * kern


def heat_kernel(params, x, y, t):
    """Deformed heat kernel h(x, y; t), real and symmetric in (x, y)."""
    if t <= 0:
        raise DomainError("need t > 0")
    a, lam = params.a, params.lambda_a
    w = 2.0 * (x.r * y.r) ** (a / 2.0) / (a * t)
    res = ikernel(IKernelArgs(params.b, params.nu, w, x.cos_angle(y)))
    if abs(res.value.imag) > 1e-12 * max(abs(res.value), 1e-300):
        raise ArithmeticError(
            f"heat kernel produced imaginary residue {res.value.imag:.2e}")
    return t ** (-(lam + 1.0)) * math.exp(-(x.r ** a + y.r ** a) / (a * t)) \
        * res.value.real


def heat_kernel_spectral(params, x, y, t, n_rad=256, n_ang=48):
    """Heat kernel by quadrature of its spectral (Fourier-side) integral.

    Integrates conj(B(x, xi)) B(y, xi) e^{-(t/a)|xi|^a} over the weighted
    measure; the independent oracle for heat_kernel (100-1000x slower).
    The oscillatory integrand is damped by the Gaussian-type factor only
    for t away from zero, so t < 0.05 is rejected.
    """
    if t < 0.05:
        raise DomainError("spectral route needs t >= 0.05 (closed form has no limit)")
    a, N, lam, b, nu = params.a, params.N, params.lambda_a, params.b, params.nu
    # radial: U = |xi|^a / a, weight U^lam e^{-t U}
    xg, wg = gauss_genlaguerre(n_rad, lam)
    U = xg / t
    Uw = wg * t ** (-(lam + 1.0))
    xi = (a * U) ** (1.0 / a)
    wx = -2j * (x.r * xi) ** (a / 2.0) / a
    wy = -2j * (y.r * xi) ** (a / 2.0) / a
    beta = (N - 3) / 2.0
    u1, w1 = gauss_jacobi(n_ang, beta, beta)
    u2, w2 = subsphere_rule(N, n_ang)
    g = x.cos_angle(y)
    sing = math.sqrt(max(0.0, 1.0 - g * g))
    Bx = ikernel_grid(b, nu, wx, u1)
    tp = (g * u1[:, None] + sing * np.sqrt(1.0 - u1[:, None] ** 2) * u2[None, :])
    By = ikernel_grid(b, nu, wy, tp.ravel()).reshape(n_rad, u1.size, u2.size)
    ang = np.einsum("ij,ijk,j,k->i", np.conj(Bx), By, w1, w2)
    val = params.c_a * a ** lam * np.sum(Uw * ang)
    if abs(val.imag) > 1e-9 * max(abs(val), 1e-300):
        raise ArithmeticError(f"spectral oracle imaginary residue {val.imag:.2e}")
    return float(val.real)


def _semigroup_direct(params, x, y, z):
    a, lam = params.a, params.lambda_a
    sh = np.sinh(z)
    w = 2.0 * (x.r * y.r) ** (a / 2.0) / (a * sh)
    kern = ikernel(IKernelArgs(params.b, params.nu, w, x.cos_angle(y))).value
    return np.exp(-(lam + 1.0) * np.log(sh)) \
        * np.exp(-(x.r ** a + y.r ** a) / a / np.tanh(z)) * kern


def _heat_closed_complex_time(params, x, y, T):
    """Closed heat-kernel form continued to complex time (Re T > 0)."""
    a, lam = params.a, params.lambda_a
    w = 2.0 * (x.r * y.r) ** (a / 2.0) / (a * T)
    kern = ikernel(IKernelArgs(params.b, params.nu, w, x.cos_angle(y))).value
    return np.exp(-(lam + 1.0) * np.log(T)) * np.exp(-(x.r ** a + y.r ** a) / (a * T)) * kern


_semigroup_calls = 0


def laguerre_semigroup_kernel(params, x, y, z):
    """Holomorphic-semigroup kernel for Re z > 0.

    Computed from the sinh/coth closed form; cross-asserted against the
    equivalent route through the heat kernel at complex time sinh(z) on
    every 64th call (every call with ADEFORM_DEBUG=1).
    """
    z = complex(z)
    if z.real <= 0:
        raise DomainError("need Re z > 0")
    global _semigroup_calls
    _semigroup_calls += 1
    val = _semigroup_direct(params, x, y, z)
    check_every = 1 if os.environ.get("ADEFORM_DEBUG") else 64
    if _semigroup_calls % check_every == 0:
        a = params.a
        pre = np.exp(-(x.r ** a + y.r ** a) / a
                     * (1.0 / np.tanh(z) - 1.0 / np.sinh(z)))
        alt = pre * _heat_closed_complex_time(params, x, y, np.sinh(z))
        if abs(val - alt) > 1e-9 * max(abs(val), 1e-300):
            raise ArithmeticError(
                f"semigroup kernel route mismatch: {val} vs {alt}")
    return val


def radial_kernel(params, m, r, s, z):
    """Degree-m radial sector of the semigroup kernel."""
    z = complex(z)
    if z.real <= 0:
        raise DomainError("need Re z > 0")
    a = params.a
    lam_m = params.lambda_am(m)
    sh = np.sinh(z)
    w = 2.0 * (r * s) ** (a / 2.0) / (a * sh)
    it = itilde_stable(lam_m, np.array([w]))[0]
    return ((r * s) ** m / (a ** lam_m) * np.exp(-(lam_m + 1.0) * np.log(sh))
            * np.exp(-(r ** a + s ** a) / a / np.tanh(z)) * it)


class ZonalHarmonic:
    """Solid harmonic r^m P_m(<axis, x/r>): a harmonic polynomial of degree m.

    P_m is the degree-m zonal kernel; sphere_mean_square is its known
    diagonal value P_m(1) under the normalized surface measure.
    """

    def __init__(self, N, m, axis=None):
        self.N = N
        self.degree = m
        if axis is None:
            axis = np.zeros(N)
            axis[0] = 1.0
        axis = np.asarray(axis, dtype=float)
        self.axis = axis / np.linalg.norm(axis)
        self.sphere_mean_square = zonal(m, N, 1.0)

    def profile(self, u):
        """Value on the sphere as a function of u = <axis, eta>."""
        from .specfun import gegenbauer_norm_table
        u = np.atleast_1d(np.asarray(u, dtype=float))
        vals = gegenbauer_norm_table(self.degree, (self.N - 2) / 2.0,
                                     u.ravel())[self.degree]
        return vals.reshape(u.shape)

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r = np.linalg.norm(pts, axis=1)
        vals = np.zeros(pts.shape[0])
        pos = r > 0
        u = np.zeros(pts.shape[0])
        u[pos] = np.clip(pts[pos] @ self.axis / r[pos], -1.0, 1.0)
        vals[pos] = r[pos] ** self.degree * self.profile(u[pos])
        if self.degree == 0:
            vals[~pos] = 1.0
        return vals if vals.size > 1 else float(vals[0])


def _harmonic_mean_square(params, harmonic, n=None):
    if hasattr(harmonic, "sphere_mean_square"):
        return float(harmonic.sphere_mean_square)
    m = harmonic.degree
    pts, w = sphere_product_rule(params.N, (n or (m + 2)))
    vals = np.asarray(harmonic(pts), dtype=float)
    return float(np.sum(w * vals ** 2) / sphere_volume(params.N))


def eigenfunction_norm_constant(params, l, m, harmonic):
    """Unit-L2 normalization for the Laguerre-Gaussian-harmonic product.

    The norm under dx/|x|^(2-a) is recomputed by quadrature: generalized
    Gauss-Laguerre in x = (2/a) s^a (exact for the polynomial integrand)
    times the harmonic's mean square on the sphere.
    """
    cache = getattr(harmonic, "_norm_cache", None)
    key = (params.a, params.N, l, m)
    if cache is not None and key in cache:
        return cache[key]
    a, N = params.a, params.N
    lam_m = params.lambda_am(m)
    xg, wg = gauss_genlaguerre(max(2 * l + 2, 8), lam_m)
    lag = laguerre(l, lam_m, xg)
    radial = (a / 2.0) ** lam_m * 0.5 * float(np.sum(wg * lag ** 2))
    angular = _harmonic_mean_square(params, harmonic) * sphere_volume(N)
    c = 1.0 / math.sqrt(radial * angular)
    try:
        if cache is None:
            harmonic._norm_cache = {}
        harmonic._norm_cache[key] = c
    except AttributeError:
        pass
    return c


def eigenfunction(params, l, m, harmonic, x):
    """Eigenfunction of (1/a)(|x|^{2-a} Lap - |x|^a) with unit weighted-L2 norm.

    C * L_l^(lam_am)((2/a)|x|^a) e^{-|x|^a/a} h(x), eigenvalue
    -(2l + lam_am + 1).  C is recomputed numerically (the closed-form
    candidate lacks the l-dependence required by Laguerre orthogonality).
    """
    a = params.a
    lam_m = params.lambda_am(m)
    c = eigenfunction_norm_constant(params, l, m, harmonic)
    xc = x.cartesian if isinstance(x, PolarPoint) else np.asarray(x, dtype=float)
    r = float(np.linalg.norm(xc))
    hval = float(np.asarray(harmonic(xc[None, :])).ravel()[0])
    return c * float(laguerre(l, lam_m, (2.0 / a) * r ** a)) \
        * math.exp(-r ** a / a) * hval


def eigenvalue(params, l, m):
    """-(2l + lam_am + 1), the spectrum of the weighted oscillator."""
    return -(2.0 * l + params.lambda_am(m) + 1.0)


def weber_integral_check(alpha, beta, delta, nu, n_nodes=384):
    """Both sides of the second exponential Bessel integral.

    numeric  = Int_0^inf e^{-delta T} J_nu(2 a sqrt(T)) J_nu(2 b sqrt(T)) dT
    closed   = (1/delta) e^{-(a^2+b^2)/delta} I_nu(2 a b / delta)

    The numeric side doubles as an acceptance test of the Gauss-Laguerre
    engine on an oscillatory integrand.
    """
    if min(alpha, beta, delta) <= 0 or nu <= -1:
        raise DomainError("need alpha, beta, delta > 0 and nu > -1")
    xg, wg = gauss_genlaguerre(n_nodes, 0.0)
    T = xg / delta
    ya, yb = 2.0 * alpha * np.sqrt(T), 2.0 * beta * np.sqrt(T)
    # J_nu(y) = (y/2)^nu * jtilde_nu(y), jtilde_nu(y) = itilde_nu(iy)
    ja = (ya / 2.0) ** nu * itilde_stable(nu, 1j * ya).real
    jb = (yb / 2.0) ** nu * itilde_stable(nu, 1j * yb).real
    numeric = float(np.sum(wg * ja * jb) / delta)
    warg = 2.0 * alpha * beta / delta
    closed = (math.exp(-(alpha ** 2 + beta ** 2) / delta) / delta
              * (warg / 2.0) ** nu * float(itilde_stable(nu, np.array([warg]))[0].real))
    return numeric, closed


def moment_poly_coeffs(m, nu):
    """Coefficients (ascending) of the m-th moment polynomial.

    p_0 = 1 and p_{k+1}(x) = x p_k(x) + x p_k'(x) + (nu+k+1) p_k(x).
    """
    if m < 0:
        raise DomainError("need m >= 0")
    c = np.array([1.0])
    for k in range(m):
        shifted = np.concatenate([[0.0], c])          # x * p
        xdp = np.arange(len(c), dtype=float) * c      # x * p'
        c = shifted + np.concatenate([xdp, [0.0]]) + (nu + k + 1.0) * np.concatenate([c, [0.0]])
    return c


def moment_poly_p(m, nu, x):
    """Value p_m(x) via the stored coefficient array."""
    return float(np.polynomial.polynomial.polyval(x, moment_poly_coeffs(m, nu)))


def moment_flow_f(params, m, t, R_a):
    """Heat flow of |y|^{ma}: sum_i a^i C(m,i) (lam+m-i+1)_i R_a^{m-i} t^i.

    R_a = |x|^a.  Equals (a t)^m p_m(R/t) with R = R_a / a.
    """
    if m < 0 or t < 0:
        raise DomainError("need m >= 0 and t >= 0")
    lam = params.lambda_a
    total = 0.0
    for i in range(m + 1):
        ratio = gamma_fn(lam + m + 1.0) / gamma_fn(lam + m - i + 1.0)
        total += params.a ** i * math.comb(m, i) * ratio * R_a ** (m - i) * t ** i
    return total


def poly_flow(params, m, l, harmonic, t, x):
    """Closed-form heat flow of |y|^{ma} p(y) for p harmonic of degree l."""
    if getattr(harmonic, "degree", l) != l:
        raise DomainError("harmonic degree does not match l")
    lam_l = params.lambda_am(l)
    xc = x.cartesian if isinstance(x, PolarPoint) else np.asarray(x, dtype=float)
    r = float(np.linalg.norm(xc))
    total = 0.0
    for i in range(m + 1):
        ratio = gamma_fn(lam_l + m + 1.0) / gamma_fn(lam_l + m - i + 1.0)
        total += params.a ** i * math.comb(m, i) * ratio * r ** ((m - i) * params.a) * t ** i
    hval = float(np.asarray(harmonic(xc[None, :])).ravel()[0])
    return total * hval
