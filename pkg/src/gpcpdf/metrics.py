"""Distances between pushforward measures, rate fitting, and predicted exponents."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError, PreconditionError
from .legendre import mapped_rule
from .pushforward import (
    SINGULAR_GAP,
    DensityGrid,
    _decomposed,
    as_density,
    cluster_points,
    evaluate,
    quantile,
)

MIN_FORM_TOL = 0.02
CDF_CHECK_TOL = 1e-5
FLOOR = 1e-12


def _knots(g: DensityGrid):
    if g.edges is None:
        return g.ys
    eps = 1e-9 * (g.support[1] - g.support[0])
    return np.concatenate([g.ys, g.edges, g.edges - eps])


def _values_on(g: DensityGrid, ys):
    out = np.empty(ys.shape)
    pos = np.clip(np.searchsorted(g.ys, ys), 0, g.ys.size - 1)
    own = g.ys[pos] == ys
    out[own] = g.values[pos[own]]
    if np.any(~own):
        out[~own] = g(ys[~own])
    return out


def _gap_intervals(ys, singular):
    """Cells of the merged grid that straddle a singular point, plus edge gaps."""
    cells, extra = set(), []
    for s in singular:
        k = int(np.searchsorted(ys, s))
        if 0 < k < ys.size:
            cells.add(k - 1)
        elif k == 0:
            extra.append((s, ys[0]))
        else:
            extra.append((ys[-1], s))
    return sorted(cells), extra


def lq_density_distance(p: DensityGrid, q_grid: DensityGrid, q: float = 1.0, exact_gaps: bool = False) -> float:
    """(integral |p - q|^q dy)^(1/q) over the union of both supports.

    Both densities are evaluated on the merged grid (each is zero outside its
    own support) and integrated by the trapezoid rule. For q = 1 the result
    is cross-checked against 2 - 2 * integral min(p, q).

    The grid stops 1e-10 short of every singular point. With ``exact_gaps``
    (q = 1 only) the cells spanning those gaps are integrated from the CDFs
    instead, as |dF_p - dF_q|; this recovers the mass of strong singularities
    such as y**(-2/3) but inherits the ill-conditioning of the CDF there,
    about 1e-8 for 1/sqrt-type singularities.
    """
    if q < 1:
        raise PreconditionError("q must be >= 1")
    for g in (p, q_grid):
        if not g.mass > 0:
            raise PreconditionError("density grid has zero total mass")
    singular = sorted(set(p.singular_points) | set(q_grid.singular_points))
    lo = min(p.support[0], q_grid.support[0])
    hi = max(p.support[1], q_grid.support[1])
    # refine around every branch image of either density over the union of
    # supports, so a singular edge of one support is also resolved from outside
    centers = np.union1d(p.breakpoints, q_grid.breakpoints) if p.edges is None and q_grid.edges is None else []
    extra = cluster_points(centers, lo, hi)
    ys = np.union1d(np.union1d(_knots(p), _knots(q_grid)), extra[(extra >= lo) & (extra <= hi)])
    for s in singular:
        ys = ys[np.abs(ys - s) > SINGULAR_GAP]
    vp, vq = _values_on(p, ys), _values_on(q_grid, ys)
    finite = np.isfinite(vp) & np.isfinite(vq)
    ys, vp, vq = ys[finite], vp[finite], vq[finite]
    h = np.diff(ys)
    diff = np.abs(vp - vq) ** q
    cell = 0.5 * h * (diff[:-1] + diff[1:])
    if q != 1:
        return float(np.sum(cell) ** (1.0 / q))
    low = np.minimum(vp, vq)
    cell_min = 0.5 * h * (low[:-1] + low[1:])
    extra_abs = extra_min = 0.0
    if exact_gaps and singular and p.cdf_fn is not None and q_grid.cdf_fn is not None:
        cells, extra = _gap_intervals(ys, singular)
        spans = [(ys[k], ys[k + 1]) for k in cells] + extra
        if spans:
            left = np.array([s[0] for s in spans])
            right = np.array([s[1] for s in spans])
            dp = p.cdf_fn(right) - p.cdf_fn(left)
            dq = q_grid.cdf_fn(right) - q_grid.cdf_fn(left)
            n = len(cells)
            cell[cells] = np.abs(dp[:n] - dq[:n])
            cell_min[cells] = np.minimum(dp[:n], dq[:n])
            extra_abs = float(np.sum(np.abs(dp[n:] - dq[n:])))
            extra_min = float(np.sum(np.minimum(dp[n:], dq[n:])))
    l1 = float(np.sum(cell)) + extra_abs
    min_form = 2.0 - 2.0 * (float(np.sum(cell_min)) + extra_min)
    if abs(l1 - min_form) > MIN_FORM_TOL:
        raise NumericalError(f"L1 estimators disagree: trapezoid {l1:.6g} vs min-form {min_form:.6g}")
    return l1


def quantile_rule(quad_points: int = 512):
    """Gauss-Legendre levels t in (0, 1) and weights used for Wasserstein integrals."""
    return mapped_rule(quad_points, 0.0, 1.0)


def quantile_distance(qa, qb, weights, p: float = 1.0) -> float:
    """(sum_k w_k |qa_k - qb_k|^p)^(1/p) for quantiles tabulated on :func:`quantile_rule`."""
    gap = np.abs(np.asarray(qa) - np.asarray(qb))
    return float(np.dot(weights, gap ** p) ** (1.0 / p))


def wasserstein(pm_a, pm_b, rho, p: float = 1.0, quad_points: int = 512, check: bool = False) -> float:
    """Wasserstein-p distance between f_# rho and g_# rho via quantile functions.

    Computes (integral_0^1 |Q_a(t) - Q_b(t)|^p dt)^(1/p) with Gauss-Legendre
    quadrature in t. With ``check`` and p = 1 the value is compared with
    :func:`cdf_l1_distance` and a NumericalError raised if they differ by
    more than 1e-5.
    """
    if p < 1:
        raise PreconditionError("p must be >= 1")
    if quad_points < 64:
        raise PreconditionError("quad_points must be >= 64")
    pm_a, pm_b = _decomposed(pm_a), _decomposed(pm_b)
    rho = as_density(rho)
    t, w = quantile_rule(quad_points)
    value = quantile_distance(quantile(pm_a, rho, t), quantile(pm_b, rho, t), w, p)
    if check and p == 1:
        other = cdf_l1_distance(pm_a, pm_b, rho)
        if abs(value - other) > CDF_CHECK_TOL:
            raise NumericalError(f"Wass1 by quantiles {value:.10g} != CDF L1 {other:.10g}")
    return value


def cdf_l1_distance(pm_a, pm_b, rho, base_points: int = 1024, order: int = 3) -> float:
    """integral |F_a - F_b| dy, composite Gauss-Legendre on a refined grid."""
    pm_a, pm_b = _decomposed(pm_a), _decomposed(pm_b)
    rho = as_density(rho)
    lo = min(pm_a.support[0], pm_b.support[0])
    hi = max(pm_a.support[1], pm_b.support[1])
    if hi <= lo:
        return 0.0
    centers = np.union1d(pm_a.breakpoint_values, pm_b.breakpoint_values)
    knots = np.union1d(np.linspace(lo, hi, base_points), cluster_points(centers, lo, hi))
    nodes, weights = mapped_rule(order, 0.0, 1.0)
    h = np.diff(knots)
    x = (knots[:-1, None] + h[:, None] * nodes[None, :]).ravel()
    w = (h[:, None] * weights[None, :]).ravel()
    fa = evaluate(pm_a, rho, x)[1]
    fb = evaluate(pm_b, rho, x)[1]
    return float(np.dot(w, np.abs(fa - fb)))


# -- convergence records and rates -------------------------------------------


CSV_FIELDS = ("n", "l1_pdf_error", "l2_error", "h1_error", "wass1", "elapsed_s")


@dataclass(frozen=True)
class SweepRecord:
    degree: int
    l1_pdf_error: float
    l2_error: float
    h1_error: float
    wass1: float
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.degree < 1:
            raise PreconditionError("degree must be >= 1")
        for name in ("l1_pdf_error", "l2_error", "h1_error", "wass1", "elapsed_s"):
            if not getattr(self, name) >= 0:
                raise PreconditionError(f"{name} must be nonnegative")

    @property
    def floored(self) -> bool:
        """True when the density error has hit the machine-precision floor."""
        return self.l1_pdf_error < FLOOR

    def value(self, field: str) -> float:
        return float(self.degree if field == "n" else getattr(self, field))


def fit_rate(records: Sequence[SweepRecord], field: str = "l1_pdf_error", n_min: int = 1, n_max: int = 10 ** 9):
    """Least-squares power law error ~ amplitude * n**exponent on [n_min, n_max]."""
    rows = [r for r in records if n_min <= r.degree <= n_max]
    if len(rows) < 3:
        raise PreconditionError(f"need >= 3 records in [{n_min}, {n_max}], got {len(rows)}")
    n = np.array([r.degree for r in rows], dtype=float)
    e = np.array([r.value(field) for r in rows])
    if np.any(e <= 0):
        raise PreconditionError(f"{field} must be strictly positive for a rate fit")
    slope, intercept = np.polyfit(np.log(n), np.log(e), 1)
    return float(np.exp(intercept)), float(slope)


# -- predicted exponents ------------------------------------------------------


class Claim(str, enum.Enum):
    SOBOLEV = "Sobolev"  # H^beta error of the surrogate for f in H^sigma
    MONOTONE_1D = "Monotone1D"
    SINGULAR_1D = "Singular1D"
    MULTI_D = "MultiD"
    TRANSPORT_BOUND = "TransportBound"


def canuto_exponent(beta: float, sigma: float) -> float:
    """e(beta, sigma) = sigma + 1/2 - 2 beta; the H^beta error decays like n^-e."""
    if not 1 <= beta <= sigma:
        raise PreconditionError("need 1 <= beta <= sigma")
    return sigma + 0.5 - 2.0 * beta


def sigma_min(d: int) -> float:
    if d < 1:
        raise PreconditionError("dimension must be >= 1")
    return 5.5 + d if d % 2 == 0 else 4.5 + d


def predicted_exponent(
    claim,
    sigma: float,
    k: Optional[int] = None,
    d: Optional[int] = None,
    m: Optional[int] = None,
    beta: Optional[float] = None,
) -> float:
    """Signed exponent of n in the density-error bound named by ``claim``.

    MultiD uses -sigma + sigma_min(d) - 2, with sigma_min(d) = 5.5 + d for even
    d and 4.5 + d for odd d.
    """
    claim = Claim(claim)
    if sigma < 1:
        raise PreconditionError("sigma must be >= 1")
    if claim is Claim.SOBOLEV:
        return -canuto_exponent(1.0 if beta is None else beta, sigma)
    if claim is Claim.MONOTONE_1D:
        return 1.5 - sigma
    if claim is Claim.SINGULAR_1D:
        if k is None or k < 2:
            raise PreconditionError("Singular1D needs k >= 2")
        return -(2.0 * sigma - 3.0) / (2.0 * (2 * k + 1))
    if claim is Claim.MULTI_D:
        if d is None:
            raise PreconditionError("MultiD needs d >= 1")
        return -sigma + sigma_min(d) - 2.0
    if m is None or m < 1:
        raise PreconditionError("TransportBound needs m >= 1")
    return -(m / (m + 1.0)) * (sigma - 5.0 / 6.0)


