"""Vectorized numpy implementations of the hot kernels.

This module is the reference fallback for :mod:`gpcpdf._ckernels`; both
expose the same functions with the same signatures and must agree to
rounding. Legendre coefficients passed here are in the *standard* basis
(P_0, P_1, ...), not the orthonormal one.
"""
import numpy as np

from .errors import ConvergenceError

NAME = "python"


def clenshaw(c, x):
    """Evaluate sum_k c[k] P_k(x) by backward recurrence."""
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    n = c.shape[0] - 1
    if n <= 0:
        return np.full(x.shape, c[0] if n == 0 else 0.0)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(n, 0, -1):
        b1, b2 = c[k] + ((2 * k + 1) / (k + 1)) * x * b1 - ((k + 1) / (k + 2)) * b2, b1
    return c[0] + x * b1 - 0.5 * b2


def clenshaw_with_derivative(c, d, x):
    """Return (value, derivative) of a series given its derivative series d."""
    return clenshaw(c, x), clenshaw(d, x)


def _legendre_pair(n, x):
    # P_n(x), P_{n-1}(x) by the three-term recurrence
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    return p, p_prev


def _check_converged(dx, tol, offset, total, what):
    bad = np.nonzero(np.abs(dx) > tol)[0]
    if bad.size:
        # positive-half arrays run from the largest node downwards
        index = total - 1 - (offset + int(bad[0]))
        raise ConvergenceError(f"{what}: Newton iteration did not converge for node {index}", index)


def gauss_legendre_nodes(N, tol=1e-14, maxiter=100):
    """Roots of P_N in ascending order and P_N' at those roots."""
    m = N // 2
    k = np.arange(1, m + 1)
    x = np.cos(np.pi * (k - 0.25) / (N + 0.5))
    dx = np.full(m, np.inf)
    for _ in range(maxiter):
        p, p_prev = _legendre_pair(N, x)
        dp = N * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if m == 0 or np.max(np.abs(dx)) <= tol:
            break
    else:
        _check_converged(dx, tol, 0, N, "gauss_legendre")
    if N % 2:
        nodes = np.concatenate([-x, [0.0], x[::-1]])
    else:
        nodes = np.concatenate([-x, x[::-1]])
    p, p_prev = _legendre_pair(N, nodes)
    dp = N * (nodes * p - p_prev) / (nodes * nodes - 1.0)
    return nodes, dp


def gauss_lobatto_interior(N, tol=1e-14, maxiter=100):
    """Interior Lobatto nodes (roots of P_{N-1}') ascending, and P_{N-1} there."""
    n = N - 1
    m = (N - 2) // 2
    k = np.arange(1, m + 1)
    x = np.cos(np.pi * k / n)
    dx = np.full(m, np.inf)
    for _ in range(maxiter):
        p, p_prev = _legendre_pair(n, x)
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        d2p = (2.0 * x * dp - n * (n + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x = x - dx
        if m == 0 or np.max(np.abs(dx)) <= tol:
            break
    else:
        _check_converged(dx, tol, 1, N, "gauss_lobatto")
    if (N - 2) % 2:
        nodes = np.concatenate([-x, [0.0], x[::-1]])
    else:
        nodes = np.concatenate([-x, x[::-1]])
    p, _ = _legendre_pair(n, nodes)
    return nodes, p


def invert_monotone(func, dfunc, a, b, fa, fb, ys, tol=1e-15, maxiter=100):
    """Solve func(x) = y on the monotone branch [a, b] for every y in ys.

    Safeguarded Newton: each iterate keeps a bracket and falls back to
    bisection whenever the Newton step leaves it or stalls. Values of y
    outside [min(fa, fb), max(fa, fb)] return the nearer endpoint.
    """
    ys = np.asarray(ys, dtype=float)
    x = np.empty_like(ys)
    if ys.size == 0:
        return x
    inc = fb >= fa
    span = fb - fa
    if span != 0.0:
        t = np.clip((ys - fa) / span, 0.0, 1.0)
        x[:] = a + (b - a) * t
    else:
        x[:] = 0.5 * (a + b)
    lo = np.full(ys.shape, float(a))
    hi = np.full(ys.shape, float(b))
    dxold = np.full(ys.shape, float(b - a))
    active = np.arange(ys.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(maxiter):
            if active.size == 0:
                break
            xi = x[active]
            v = func(xi) - ys[active]
            dv = dfunc(xi)
            below = (v < 0) if inc else (v > 0)
            lo_i = np.where(below, xi, lo[active])
            hi_i = np.where(below, hi[active], xi)
            step = v / dv
            xn = xi - step
            bad = (~np.isfinite(xn)) | (xn <= lo_i) | (xn >= hi_i) | (np.abs(2.0 * v) > np.abs(dxold[active] * dv))
            xn = np.where(bad, 0.5 * (lo_i + hi_i), xn)
            exact = v == 0
            xn = np.where(exact, xi, xn)
            dx = xn - xi
            scale = 1.0 + np.abs(xi)
            done = exact | (np.abs(dx) <= tol * scale) | (hi_i - lo_i <= tol * scale)
            x[active] = xn
            lo[active] = lo_i
            hi[active] = hi_i
            dxold[active] = dx
            active = active[~done]
    return x


def invert_series(c, d, a, b, fa, fb, ys, tol=1e-15, maxiter=100):
    """invert_monotone specialised to a Legendre series (standard basis)."""
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    return invert_monotone(lambda x: clenshaw(c, x), lambda x: clenshaw(d, x), a, b, fa, fb, ys, tol, maxiter)
