# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; a drop-in replacement for gpcpdf._pykernels.

Every function here mirrors the numpy version of the same name and must
agree with it to rounding (see tests/test_kernels.py).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, fabs, isfinite, M_PI

from .errors import ConvergenceError

cnp.import_array()

NAME = "cython"


cdef class _Ratios:
    """Recurrence ratios a[k] = (2k+1)/(k+1) and b[k] = k/(k+1), k < size."""

    cdef double[::1] a
    cdef double[::1] b

    def __cinit__(self, Py_ssize_t size):
        k = np.arange(max(size, 2), dtype=np.float64)
        self.a = (2.0 * k + 1.0) / (k + 1.0)
        self.b = k / (k + 1.0)


cdef inline double _clenshaw(const double[::1] c, Py_ssize_t n, double x,
                             const double[::1] a, const double[::1] b) nogil:
    # b_k = c_k + a_k x b_{k+1} - b_{k+1}' b_{k+2} with b_{k+1}' = (k+1)/(k+2)
    cdef double b1 = 0.0, b2 = 0.0, tmp
    cdef Py_ssize_t k
    if n < 0:
        return 0.0
    if n == 0:
        return c[0]
    for k in range(n, 0, -1):
        tmp = c[k] + a[k] * x * b1 - b[k + 1] * b2
        b2 = b1
        b1 = tmp
    return c[0] + x * b1 - 0.5 * b2


def clenshaw(c, x):
    """Evaluate sum_k c[k] P_k(x) by backward recurrence."""
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    xa = np.asarray(x, dtype=np.float64)
    shape = xa.shape
    cdef const double[::1] xv = np.ascontiguousarray(xa.ravel())
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, k, m = xv.shape[0], n = cv.shape[0] - 1
    cdef _Ratios r = _Ratios(n + 2)
    cdef double ak, bk, ck
    if n == 0:
        return np.full(shape, cv[0])
    # degree loop outside, point loop inside: the inner loop has no carried
    # dependency, so the compiler can vectorize it
    b1_arr = np.zeros(m, dtype=np.float64)
    b2_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] b1 = b1_arr
    cdef double[::1] b2 = b2_arr
    cdef double tmp
    with nogil:
        for k in range(n, 0, -1):
            ak = r.a[k]
            bk = r.b[k + 1]
            ck = cv[k]
            for i in range(m):
                tmp = ck + ak * xv[i] * b1[i] - bk * b2[i]
                b2[i] = b1[i]
                b1[i] = tmp
        for i in range(m):
            ov[i] = cv[0] + xv[i] * b1[i] - 0.5 * b2[i]
    return out.reshape(shape)


def clenshaw_with_derivative(c, d, x):
    """Return (value, derivative) of a series given its derivative series d."""
    return clenshaw(c, x), clenshaw(d, x)


cdef inline void _legendre_pair(Py_ssize_t n, double x, double* p, double* p_prev,
                                const double[::1] ra, const double[::1] rb) nogil:
    # P_{k+1} = a_k x P_k - b_k P_{k-1}
    cdef double a = 1.0, b, tmp
    cdef Py_ssize_t k
    if n == 0:
        p[0] = 1.0
        p_prev[0] = 0.0
        return
    b = x
    for k in range(1, n):
        tmp = ra[k] * x * b - rb[k] * a
        a = b
        b = tmp
    p[0] = b
    p_prev[0] = a


def gauss_legendre_nodes(Py_ssize_t N, double tol=1e-14, int maxiter=100):
    """Roots of P_N in ascending order and P_N' at those roots."""
    cdef Py_ssize_t m = N // 2, i, it
    cdef double x, p, pp, dp, dx
    nodes = np.zeros(N, dtype=np.float64)
    dps = np.empty(N, dtype=np.float64)
    cdef double[::1] nv = nodes
    cdef double[::1] dv = dps
    cdef Py_ssize_t failed = -1
    cdef _Ratios r = _Ratios(N + 1)
    with nogil:
        for i in range(m):
            x = cos(M_PI * (i + 0.75) / (N + 0.5))
            dx = 1.0
            for it in range(maxiter):
                _legendre_pair(N, x, &p, &pp, r.a, r.b)
                dp = N * (x * p - pp) / (x * x - 1.0)
                dx = p / dp
                x -= dx
                if fabs(dx) <= tol:
                    break
            if fabs(dx) > tol and failed < 0:
                failed = N - 1 - i
            nv[N - 1 - i] = x
            nv[i] = -x
        for i in range(N):
            x = nv[i]
            _legendre_pair(N, x, &p, &pp, r.a, r.b)
            dv[i] = N * (x * p - pp) / (x * x - 1.0)
    if failed >= 0:
        raise ConvergenceError(f"gauss_legendre: Newton iteration did not converge for node {failed}", failed)
    return nodes, dps


def gauss_lobatto_interior(Py_ssize_t N, double tol=1e-14, int maxiter=100):
    """Interior Lobatto nodes (roots of P_{N-1}') ascending, and P_{N-1} there."""
    cdef Py_ssize_t n = N - 1, M = N - 2, m = (N - 2) // 2, i, it
    cdef double x, p, pp, dp, d2p, dx
    nodes = np.zeros(M, dtype=np.float64)
    ps = np.empty(M, dtype=np.float64)
    cdef double[::1] nv = nodes
    cdef double[::1] pv = ps
    cdef Py_ssize_t failed = -1
    cdef _Ratios r = _Ratios(N + 1)
    with nogil:
        for i in range(m):
            x = cos(M_PI * (i + 1.0) / n)
            dx = 1.0
            for it in range(maxiter):
                _legendre_pair(n, x, &p, &pp, r.a, r.b)
                dp = n * (x * p - pp) / (x * x - 1.0)
                d2p = (2.0 * x * dp - n * (n + 1.0) * p) / (1.0 - x * x)
                dx = dp / d2p
                x -= dx
                if fabs(dx) <= tol:
                    break
            if fabs(dx) > tol and failed < 0:
                failed = N - 2 - i
            nv[M - 1 - i] = x
            nv[i] = -x
        for i in range(M):
            _legendre_pair(n, nv[i], &p, &pp, r.a, r.b)
            pv[i] = p
    if failed >= 0:
        raise ConvergenceError(f"gauss_lobatto: Newton iteration did not converge for node {failed}", failed)
    return nodes, ps


def invert_series(c, d, double a, double b, double fa, double fb, ys, double tol=1e-15, int maxiter=100):
    """Solve g(x) = y on the monotone branch [a, b] of a Legendre series g.

    Same safeguarded Newton iteration as _pykernels.invert_monotone.
    """
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t nc = cv.shape[0] - 1, nd = dv.shape[0] - 1, i, it
    out = np.empty(yv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef bint inc = fb >= fa, below
    cdef double span = fb - fa, y, x, t, lo, hi, dxold, v, dval, xn, dx, scale
    cdef _Ratios r = _Ratios(nc + 2)
    with nogil:
        for i in range(yv.shape[0]):
            y = yv[i]
            if span != 0.0:
                t = (y - fa) / span
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                x = a + (b - a) * t
            else:
                x = 0.5 * (a + b)
            lo = a
            hi = b
            dxold = b - a
            for it in range(maxiter):
                v = _clenshaw(cv, nc, x, r.a, r.b) - y
                dval = _clenshaw(dv, nd, x, r.a, r.b)
                if v == 0.0:
                    break
                below = (v < 0.0) if inc else (v > 0.0)
                if below:
                    lo = x
                else:
                    hi = x
                xn = x - v / dval
                if (not isfinite(xn)) or xn <= lo or xn >= hi or fabs(2.0 * v) > fabs(dxold * dval):
                    xn = 0.5 * (lo + hi)
                dx = xn - x
                scale = 1.0 + fabs(x)
                x = xn
                dxold = dx
                if fabs(dx) <= tol * scale or hi - lo <= tol * scale:
                    break
            ov[i] = x
    return out
