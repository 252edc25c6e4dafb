"""gPC surrogates of a scalar quantity of interest on [-1, 1].

A degree-n collocation surrogate uses N = n + 1 quadrature nodes; a Galerkin
surrogate projects onto P_0..P_n with an over-resolved Gauss-Legendre rule.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NumericalError, PreconditionError, RegistryError
from .legendre import (
    LegendreSeries,
    Provenance,
    RuleKind,
    gauss_legendre_rule,
    legendre_vandermonde,
    quadrature_rule,
)


@dataclass(frozen=True, eq=False)
class QuantityOfInterest:
    """A real map on [-1, 1] with optional analytic first and second derivatives.

    All callables take and return numpy arrays.
    """

    id: str
    eval: Callable
    deriv: Optional[Callable] = None
    deriv2: Optional[Callable] = None
    smoothness_note: str = ""

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.deriv is None:
            raise PreconditionError(f"function {self.id!r} has no analytic derivative")
        return self.deriv(np.asarray(x, dtype=float))

    def second_derivative(self, x):
        if self.deriv2 is None:
            raise PreconditionError(f"function {self.id!r} has no second derivative")
        return self.deriv2(np.asarray(x, dtype=float))

    def validate(self, points: int = 10_000) -> None:
        x = np.linspace(-1.0, 1.0, points)
        if not np.all(np.isfinite(self(x))):
            raise NumericalError(f"function {self.id!r} is not finite on [-1, 1]")


def _polynomial_qoi(name, coeffs, note="polynomial"):
    p = np.polynomial.Polynomial(coeffs)
    dp, d2p = p.deriv(1), p.deriv(2)
    return QuantityOfInterest(name, p, dp, d2p, note)


def _builtin(name):
    if name == "sin20":
        return QuantityOfInterest(
            name,
            lambda a: np.sin(20.0 * a),
            lambda a: 20.0 * np.cos(20.0 * a),
            lambda a: -400.0 * np.sin(20.0 * a),
            "entire; 12 interior critical points",
        )
    if name == "abs_cubed":
        return QuantityOfInterest(
            name,
            lambda a: np.abs(a) ** 3,
            lambda a: 3.0 * a * np.abs(a),
            lambda a: 6.0 * np.abs(a),
            "in H^3 but not H^4; f'(0) = f''(0) = 0",
        )
    if name == "abs_shift":
        # derivative at the kink alpha = 0.5 taken from the right
        return QuantityOfInterest(
            name,
            lambda a: np.abs(a - 0.5),
            lambda a: np.where(a >= 0.5, 1.0, -1.0),
            lambda a: np.zeros_like(a),
            "in H^1 but not H^2; kink at 0.5",
        )
    if name == "square":
        return _polynomial_qoi(name, [0.0, 0.0, 1.0])
    if name == "identity":
        return _polynomial_qoi(name, [0.0, 1.0])
    if name == "cubic_mono":
        return _polynomial_qoi(name, [0.0, 2.0, 0.0, 1.0], "polynomial; f' >= 2")
    if name == "exp":
        return QuantityOfInterest(name, np.exp, np.exp, np.exp, "entire; strictly increasing")
    return None


FUNCTION_NAMES = ("sin20", "abs_cubed", "abs_shift", "square", "identity", "cubic_mono", "exp")


def _floats(text, name):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise RegistryError(f"unknown function id {name!r}") from None


def get_function(name: str) -> QuantityOfInterest:
    """Resolve a registry id such as ``sin20``, ``affine:2,1`` or ``poly:0,0,1``."""
    qoi = _builtin(name)
    if qoi is not None:
        return qoi
    head, _, tail = name.partition(":")
    if head == "affine":
        ab = _floats(tail, name)
        if len(ab) != 2:
            raise RegistryError(f"unknown function id {name!r}")
        return _polynomial_qoi(name, [ab[1], ab[0]], "affine")
    if head == "poly":
        c = _floats(tail, name)
        if not c:
            raise RegistryError(f"unknown function id {name!r}")
        return _polynomial_qoi(name, c)
    raise RegistryError(f"unknown function id {name!r}")


def as_qoi(f) -> QuantityOfInterest:
    if isinstance(f, QuantityOfInterest):
        return f
    if isinstance(f, str):
        return get_function(f)
    raise PreconditionError(f"cannot interpret {f!r} as a quantity of interest")


def _sample(f, x):
    values = np.asarray(f(x), dtype=float)
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        k = int(bad[0])
        raise NumericalError(f"{f.id}: non-finite value at node {k} (alpha = {x[k]!r})")
    return values


def fit_collocation(f, n: int, rule_kind=RuleKind.GAUSS_LEGENDRE) -> LegendreSeries:
    """Degree-n collocation surrogate built from f at N = n + 1 quadrature nodes.

    The coefficients are the discrete projections
    ``sum_k f(alpha_k) phat_j(alpha_k) w_k``. On Lobatto nodes the top mode is
    divided by its discrete norm (2n + 1) / n so that the result interpolates f
    at every node, including +-1.
    """
    if n < 1:
        raise PreconditionError("collocation degree must be >= 1")
    f = as_qoi(f)
    kind = RuleKind(rule_kind)
    rule = quadrature_rule(kind, n + 1)
    values = _sample(f, rule.nodes)
    V = legendre_vandermonde(rule.nodes, n)
    coeffs = V.T @ (rule.weights * values)
    if kind is RuleKind.GAUSS_LOBATTO:
        coeffs[n] *= n / (2.0 * n + 1.0)
    return LegendreSeries(coeffs, Provenance("collocation", kind.value, n + 1))


def fit_galerkin(f, n: int, quad_order: Optional[int] = None) -> LegendreSeries:
    """L2 projection of f onto degree <= n, with Gauss-Legendre quadrature."""
    if n < 1:
        raise PreconditionError("Galerkin degree must be >= 1")
    if quad_order is None:
        quad_order = 2 * n + 64
    if quad_order < n + 1:
        raise PreconditionError(f"quad_order must be >= n + 1 = {n + 1}")
    f = as_qoi(f)
    rule = gauss_legendre_rule(quad_order)
    values = _sample(f, rule.nodes)
    coeffs = legendre_vandermonde(rule.nodes, n).T @ (rule.weights * values)
    return LegendreSeries(coeffs, Provenance("galerkin", None, quad_order))


class Method(str, enum.Enum):
    COLLOCATION_GL = "collocation_gl"
    COLLOCATION_GLL = "collocation_gll"
    GALERKIN = "galerkin"


def fit(f, n: int, method=Method.COLLOCATION_GL) -> LegendreSeries:
    method = Method(method)
    if method is Method.COLLOCATION_GL:
        return fit_collocation(f, n, RuleKind.GAUSS_LEGENDRE)
    if method is Method.COLLOCATION_GLL:
        return fit_collocation(f, n, RuleKind.GAUSS_LOBATTO)
    return fit_galerkin(f, n)


class Norm(str, enum.Enum):
    L2 = "L2"
    H1 = "H1"
    C0 = "C0"
    C1 = "C1"


def error_norms(f, s: LegendreSeries, norm=Norm.L2, resolution: Optional[int] = None) -> float:
    """Distance between f and the surrogate s in L2, H1, C0 or C1.

    L2 and H1 use Gauss-Legendre quadrature of order ``resolution``; C0 and C1
    take the maximum over 8 * resolution uniform points plus those nodes. The
    C1 value is sup|f - s| + sup|f' - s'|.
    """
    f = as_qoi(f)
    norm = Norm(norm)
    minimum = 2 * s.degree + 16
    if resolution is None:
        resolution = max(minimum, 256)
    if resolution < minimum:
        raise PreconditionError(f"resolution must be >= 2 * degree + 16 = {minimum}")
    needs_deriv = norm in (Norm.H1, Norm.C1)
    if needs_deriv and f.deriv is None:
        raise PreconditionError(f"{norm.value} error requires an analytic derivative of {f.id!r}")
    rule = gauss_legendre_rule(resolution)
    if norm in (Norm.L2, Norm.H1):
        x = rule.nodes
        e2 = (f(x) - s(x)) ** 2
        if needs_deriv:
            e2 = e2 + (f.derivative(x) - s.derivative(x)) ** 2
        return float(np.sqrt(rule.integrate(e2)))
    x = np.union1d(np.linspace(-1.0, 1.0, 8 * resolution), rule.nodes)
    out = float(np.max(np.abs(f(x) - s(x))))
    if needs_deriv:
        out += float(np.max(np.abs(f.derivative(x) - s.derivative(x))))
    return out
