"""Legendre polynomials, Legendre series, and Gauss quadrature rules on [-1, 1].

Series coefficients are stored in the orthonormal basis
``phat_j = sqrt((2j + 1) / 2) * P_j`` so that the L2([-1, 1]) norm of a
series is the Euclidean norm of its coefficient vector.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._backend import kernels
from .errors import DomainError, PreconditionError

MAX_NODES = 10_000


class RuleKind(str, enum.Enum):
    GAUSS_LEGENDRE = "gauss_legendre"
    GAUSS_LOBATTO = "gauss_lobatto"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes (ascending) and weights of an N-point rule on [-1, 1]."""

    kind: RuleKind
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class Provenance:
    """How a series was built: ``method`` is collocation, galerkin or manual."""

    method: str
    rule: Optional[str] = None
    points: Optional[int] = None

    def __str__(self):
        if self.method == "collocation":
            return f"collocation({self.rule}, N={self.points})"
        if self.method == "galerkin":
            return f"galerkin(quad_order={self.points})"
        return self.method


MANUAL = Provenance("manual")


def _check_domain(alpha):
    a = np.asarray(alpha, dtype=float)
    if np.any(np.abs(a) > 1.0) or np.any(np.isnan(a)):
        raise DomainError("evaluation point outside [-1, 1]")
    return a


def normalization(n):
    """Factor sqrt((2n + 1) / 2) turning P_n into the orthonormal phat_n."""
    return np.sqrt((2.0 * np.asarray(n, dtype=float) + 1.0) / 2.0)


def eval_legendre(n: int, alpha, normalized: bool = False):
    """P_n(alpha), or phat_n(alpha) when ``normalized``, by three-term recurrence."""
    if n < 0:
        raise PreconditionError("degree must be nonnegative")
    a = _check_domain(alpha)
    p_prev = np.ones_like(a)
    p = p_prev if n == 0 else a.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * a * p - k * p_prev) / (k + 1), p
    if normalized:
        p = p * normalization(n)
    return float(p) if p.ndim == 0 else p


def derivative_coeffs(c):
    """Standard-basis coefficients of d/dx sum_k c[k] P_k (one shorter)."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0] - 1
    if n <= 0:
        return np.zeros(1)
    d = np.zeros(n + 2)
    for k in range(n, 0, -1):
        d[k - 1] = (2 * k - 1) * (c[k] + d[k + 1] / (2 * k + 3))
    return d[:n]


@dataclass(frozen=True, eq=False)
class LegendreSeries:
    """A degree-n polynomial given by orthonormal Legendre coefficients."""

    coeffs: np.ndarray
    provenance: Provenance = MANUAL
    _std: np.ndarray = field(init=False, repr=False)
    _d1: np.ndarray = field(init=False, repr=False)
    _d2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise PreconditionError("a series needs at least one coefficient")
        c.setflags(write=False)
        std = c * normalization(np.arange(c.size))
        d1 = derivative_coeffs(std)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_std", std)
        object.__setattr__(self, "_d1", d1)
        object.__setattr__(self, "_d2", derivative_coeffs(d1))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def standard_coeffs(self) -> np.ndarray:
        return self._std

    @property
    def derivative_standard_coeffs(self) -> np.ndarray:
        return self._d1

    def __call__(self, x):
        return kernels.clenshaw(self._std, np.asarray(x, dtype=float))

    def derivative(self, x):
        return kernels.clenshaw(self._d1, np.asarray(x, dtype=float))

    def second_derivative(self, x):
        return kernels.clenshaw(self._d2, np.asarray(x, dtype=float))

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __repr__(self):
        return f"LegendreSeries(degree={self.degree}, provenance={self.provenance})"


def eval_series(s: LegendreSeries, alpha):
    """Value and exact derivative of ``s`` at alpha (scalar or array)."""
    a = _check_domain(alpha)
    v, d = s(a), s.derivative(a)
    if a.ndim == 0:
        return float(v), float(d)
    return v, d


def _frozen(*arrays):
    for a in arrays:
        a.setflags(write=False)
    return arrays


@functools.lru_cache(maxsize=128)
def _gauss_legendre(N):
    nodes, dp = kernels.gauss_legendre_nodes(N)
    weights = 2.0 / ((1.0 - nodes * nodes) * dp * dp)
    return _frozen(np.asarray(nodes), weights)


@functools.lru_cache(maxsize=128)
def _gauss_lobatto(N):
    interior, p = kernels.gauss_lobatto_interior(N)
    nodes = np.concatenate([[-1.0], interior, [1.0]])
    pn = np.concatenate([[(-1.0) ** (N - 1)], p, [1.0]])
    weights = 2.0 / (N * (N - 1) * pn * pn)
    return _frozen(nodes, weights)


def gauss_legendre_rule(N: int) -> QuadratureRule:
    """N-point Gauss-Legendre rule: nodes are the roots of P_N."""
    if not 1 <= N <= MAX_NODES:
        raise PreconditionError(f"Gauss-Legendre order must be in [1, {MAX_NODES}], got {N}")
    nodes, weights = _gauss_legendre(int(N))
    return QuadratureRule(RuleKind.GAUSS_LEGENDRE, int(N), nodes, weights)


def gauss_lobatto_rule(N: int) -> QuadratureRule:
    """N-point Gauss-Lobatto rule: +-1 plus the roots of P_{N-1}'."""
    if not 2 <= N <= MAX_NODES:
        raise PreconditionError(f"Gauss-Lobatto order must be in [2, {MAX_NODES}], got {N}")
    nodes, weights = _gauss_lobatto(int(N))
    return QuadratureRule(RuleKind.GAUSS_LOBATTO, int(N), nodes, weights)


def quadrature_rule(kind, N: int) -> QuadratureRule:
    kind = RuleKind(kind)
    if kind is RuleKind.GAUSS_LEGENDRE:
        return gauss_legendre_rule(N)
    return gauss_lobatto_rule(N)


def mapped_rule(N: int, a: float, b: float):
    """Gauss-Legendre nodes and weights transplanted to [a, b]."""
    rule = gauss_legendre_rule(N)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * rule.nodes, half * rule.weights


def legendre_vandermonde(x, n: int, normalized: bool = True) -> np.ndarray:
    """Matrix V[k, j] = phat_j(x_k) (or P_j(x_k)) for j = 0..n."""
    x = np.asarray(x, dtype=float)
    V = np.empty((x.size, n + 1))
    V[:, 0] = 1.0
    if n >= 1:
        V[:, 1] = x
    for k in range(1, n):
        V[:, k + 1] = ((2 * k + 1) * x * V[:, k] - k * V[:, k - 1]) / (k + 1)
    if normalized:
        V *= normalization(np.arange(n + 1))
    return V
