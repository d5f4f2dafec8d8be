"""Gauss quadrature rule builders and sphere constants.

Rules are computed by Golub-Welsch (symmetric tridiagonal eigenproblem)
where scipy's evaluators overflow at high order; otherwise scipy is used
directly.
"""

import numpy as np
from scipy import special
from scipy.linalg import eigvalsh_tridiagonal


def gauss_genlaguerre_log(n, alpha):
    """Nodes and log-weights for the weight x^alpha e^-x on [0, inf).

    Nodes are eigenvalues of the Jacobi matrix; weights come from the
    Christoffel sum w_i = mu0 / sum_k p_k(x_i)^2 over the orthonormal
    polynomials, carried with running rescaling.  This stays exact in
    log space where eigenvector or direct-weight routes underflow
    (far-tail weights reach e^-1500 at high order).
    """
    if alpha <= -1:
        raise ValueError(f"generalized Laguerre weight needs alpha > -1, got {alpha}")
    k = np.arange(n, dtype=float)
    diag = 2 * k + alpha + 1
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    nodes = eigvalsh_tridiagonal(diag, off)
    logmu0 = special.gammaln(alpha + 1.0)
    p_prev = np.zeros_like(nodes)
    p_cur = np.ones_like(nodes)
    ssq = np.ones_like(nodes)
    logscale = np.zeros_like(nodes)
    for j in range(1, n):
        p_next = ((nodes - diag[j - 1]) * p_cur - (off[j - 2] if j >= 2 else 0.0)
                  * p_prev) / off[j - 1]
        p_prev, p_cur = p_cur, p_next
        ssq = ssq + p_cur ** 2
        big = np.abs(p_cur) > 1e120
        if np.any(big):
            p_prev[big] *= 1e-120
            p_cur[big] *= 1e-120
            ssq[big] *= 1e-240
            logscale[big] += 240.0 * np.log(10.0)
    return nodes, logmu0 - logscale - np.log(ssq)


def gauss_genlaguerre(n, alpha):
    """Nodes and weights for x^alpha e^-x; far-tail weights may flush to
    subnormal zero, which is harmless where plain weights suffice."""
    nodes, logw = gauss_genlaguerre_log(n, alpha)
    return nodes, np.exp(logw)


def gauss_jacobi(n, alpha, beta):
    """Nodes and weights for the weight (1-x)^alpha (1+x)^beta on [-1, 1]."""
    return special.roots_jacobi(n, alpha, beta)


def gauss_hermite(n):
    """Nodes and weights for the weight e^{-x^2} on (-inf, inf)."""
    return special.roots_hermite(n)


def gauss_legendre_panel(n, a, b, panel=256):
    """Gauss-Legendre rule on [a, b]; large n becomes composite panels.

    A single high-order rule needs an O(n^2) companion matrix, so past
    ``panel`` nodes the interval splits into equal panels of that order
    (same convergence class once the integrand is resolved per panel).
    """
    if n <= panel:
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w
    k = int(np.ceil(n / panel))
    edges = np.linspace(a, b, k + 1)
    x, w = np.polynomial.legendre.leggauss(panel)
    nodes = (0.5 * np.diff(edges)[:, None] * x[None, :]
             + 0.5 * (edges[:-1] + edges[1:])[:, None]).ravel()
    weights = (0.5 * np.diff(edges)[:, None] * w[None, :]).ravel()
    return nodes, weights


def sphere_volume(N):
    """Surface measure of the unit sphere S^{N-1} in R^N."""
    return 2 * np.pi ** (N / 2.0) / special.gamma(N / 2.0)


def sphere_cap_rule(N, n):
    """Rule for int_{S^{N-1}} g(<e, eta>) d eta = sum w_i g(u_i).

    Reduces the sphere integral of a zonal function to [-1, 1] with the
    Jacobi weight (1-u^2)^{(N-3)/2}; the factor vol(S^{N-2}) is folded
    into the weights.  N = 2 uses the endpoint-safe Chebyshev weight.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    beta = (N - 3) / 2.0
    u, w = gauss_jacobi(n, beta, beta)
    fac = sphere_volume(N - 1) if N >= 3 else 1.0
    if N == 2:
        # int_{S^1} g(cos th) d th = 2 int g(u) (1-u^2)^{-1/2} du
        fac = 2.0
    return u, fac * w


def subsphere_rule(N, n):
    """Rule for int_{S^{N-2}} g(<e, eta>) d eta, the ring around a pole.

    For N = 2 the ring is the two-point sphere S^0.
    """
    if N == 2:
        return np.array([1.0, -1.0]), np.array([1.0, 1.0])
    if N == 3:
        u, w = gauss_jacobi(n, -0.5, -0.5)
        return u, 2.0 * w
    beta = (N - 4) / 2.0
    u, w = gauss_jacobi(n, beta, beta)
    return u, sphere_volume(N - 2) * w


def sphere_product_rule(N, n):
    """Full product cubature on S^{N-1}: points (K, N) and weights (K,).

    Recursive polar construction; exact for spherical polynomials up to
    degree ~ 2n-1.  Weights sum to vol(S^{N-1}).  Intended for low N and
    moderate degree (K grows like n^{N-1}).
    """
    if N == 2:
        m = max(4, 2 * n)
        th = 2 * np.pi * np.arange(m) / m
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
        return pts, np.full(m, 2 * np.pi / m)
    beta = (N - 3) / 2.0
    u, wu = gauss_jacobi(n, beta, beta)
    sub_pts, sub_w = sphere_product_rule(N - 1, n)
    s = np.sqrt(1 - u**2)
    pts = np.concatenate(
        [np.repeat(u, sub_pts.shape[0])[:, None],
         np.repeat(s, sub_pts.shape[0])[:, None] * np.tile(sub_pts, (n, 1))],
        axis=1,
    )
    w = (wu[:, None] * sub_w[None, :]).ravel()
    return pts, w
