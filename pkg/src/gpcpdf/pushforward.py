"""Pushforward measures f_# rho of an input density on [-1, 1].

The density of the pushforward is evaluated exactly from the change of
variables over monotone branches,

    p(y) = sum over alpha with f(alpha) = y of r(alpha) / |f'(alpha)|,

and the CDF as the rho-measure of the union of sub-intervals where f <= y.
A Monte Carlo sampler and a histogram estimator serve as an independent
oracle for both.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _pykernels
from ._backend import kernels
from .errors import (
    NumericalError,
    PreconditionError,
    RegistryError,
    UnresolvedOscillationError,
)
from .legendre import LegendreSeries, mapped_rule
from .surrogate import as_qoi

ZERO_DERIV = 1e-10  # |f'| below this at a scan point marks a critical point
SINGULAR_DERIV = 1e-8  # |f'(c)| below this makes the image of c a density singularity
SINGULAR_GAP = 1e-12  # closest approach to a singular image when evaluating p
CRIT_TOL = 1e-13
CLUSTER_MIN = 1e-10
CLUSTER_PER_DECADE = 12
KAPPA_EXCLUSION = 1e-2
BRANCH_PROBES = 64


# -- input densities ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InputDensity:
    """Probability density r on [-1, 1] with optional closed-form CDF and inverse."""

    id: str
    r: Callable
    r_deriv: Optional[Callable] = None
    cdf_fn: Optional[Callable] = None
    ppf_fn: Optional[Callable] = None

    def __call__(self, alpha):
        return self.r(np.asarray(alpha, dtype=float))

    def cdf(self, alpha):
        """rho([-1, alpha]); order-64 Gauss-Legendre when no closed form exists."""
        alpha = np.clip(np.asarray(alpha, dtype=float), -1.0, 1.0)
        if self.cdf_fn is not None:
            return self.cdf_fn(alpha)
        nodes, weights = mapped_rule(64, -1.0, 1.0)
        flat = alpha.ravel()
        half = 0.5 * (flat + 1.0)
        x = -1.0 + half[:, None] * (nodes[None, :] + 1.0)
        out = half * (self.r(x) @ weights)
        return out.reshape(alpha.shape)

    def ppf(self, u):
        """Inverse CDF; bisection on :meth:`cdf` when no closed form exists."""
        u = np.asarray(u, dtype=float)
        if self.ppf_fn is not None:
            return self.ppf_fn(u)
        lo = np.full(u.shape, -1.0)
        hi = np.full(u.shape, 1.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def validate(self, tol: float = 1e-10) -> None:
        nodes, weights = mapped_rule(128, -1.0, 1.0)
        values = self(nodes)
        if np.any(values < 0) or np.any(self(np.array([-1.0, 1.0])) < 0):
            raise NumericalError(f"density {self.id!r} is negative somewhere")
        mass = float(weights @ values)
        if abs(mass - 1.0) > tol:
            raise NumericalError(f"density {self.id!r} integrates to {mass!r}, not 1")


def _quadratic_cdf(a):
    return 0.375 * (a + a ** 3 / 3.0) + 0.5


DENSITIES = {
    "uniform": lambda: InputDensity(
        "uniform",
        lambda a: np.full(np.shape(a), 0.5),
        lambda a: np.zeros(np.shape(a)),
        lambda a: 0.5 * (a + 1.0),
        lambda u: 2.0 * u - 1.0,
    ),
    "cosine": lambda: InputDensity(
        "cosine",
        lambda a: 0.25 * np.pi * np.cos(0.5 * np.pi * a),
        lambda a: -0.125 * np.pi ** 2 * np.sin(0.5 * np.pi * a),
        lambda a: 0.5 * (1.0 + np.sin(0.5 * np.pi * a)),
        lambda u: (2.0 / np.pi) * np.arcsin(np.clip(2.0 * u - 1.0, -1.0, 1.0)),
    ),
    "quadratic": lambda: InputDensity(
        "quadratic",
        lambda a: 0.375 * (1.0 + a * a),
        lambda a: 0.75 * a,
        _quadratic_cdf,
    ),
}


def get_density(name: str) -> InputDensity:
    try:
        return DENSITIES[name]()
    except KeyError:
        raise RegistryError(f"unknown density id {name!r}") from None


def as_density(rho) -> InputDensity:
    if isinstance(rho, InputDensity):
        return rho
    if rho is None:
        return get_density("uniform")
    return get_density(rho)


# -- monotone decomposition --------------------------------------------------


@dataclass(frozen=True)
class Branch:
    """Monotone piece [a, b] of a map; ``lo``/``hi`` bound its image."""

    a: float
    b: float
    direction: int
    fa: float
    fb: float

    @property
    def lo(self) -> float:
        return min(self.fa, self.fb)

    @property
    def hi(self) -> float:
        return max(self.fa, self.fb)


@dataclass(frozen=True, eq=False)
class PiecewiseMonotoneMap:
    map: object
    critical_points: np.ndarray
    branches: tuple
    kappa: float
    support: tuple
    singular_values: np.ndarray
    breakpoint_values: np.ndarray

    def invert(self, branch: Branch, ys) -> np.ndarray:
        ys = np.ascontiguousarray(ys, dtype=float)
        m = self.map
        if isinstance(m, LegendreSeries):
            return kernels.invert_series(
                m.standard_coeffs, m.derivative_standard_coeffs, branch.a, branch.b, branch.fa, branch.fb, ys
            )
        return _pykernels.invert_monotone(m, m.derivative, branch.a, branch.b, branch.fa, branch.fb, ys)


def _as_map(m):
    if isinstance(m, PiecewiseMonotoneMap):
        return m.map
    if isinstance(m, LegendreSeries):
        return m
    return as_qoi(m)


def _bisect_sign_changes(deriv, left, right):
    dl = deriv(left)
    while True:
        width = right - left
        if np.all(width <= CRIT_TOL):
            break
        mid = 0.5 * (left + right)
        dm = deriv(mid)
        same = np.sign(dm) == np.sign(dl)
        left = np.where(same, mid, left)
        dl = np.where(same, dm, dl)
        right = np.where(same, right, mid)
    return 0.5 * (left + right), left, right


def _sign_change_cells(d):
    nz = np.abs(d) >= ZERO_DERIV
    s = np.sign(d)
    return np.nonzero(nz[:-1] & nz[1:] & (s[:-1] != s[1:]))[0]


def _refine_clusters(deriv, x, cells):
    """Rescan runs of adjacent sign-change cells at 8x resolution."""
    if cells.size < 2:
        return [(x[i], x[i + 1]) for i in cells]
    out = []
    runs = np.split(cells, np.nonzero(np.diff(cells) != 1)[0] + 1)
    for run in runs:
        if run.size == 1:
            out.append((x[run[0]], x[run[0] + 1]))
            continue
        fine = np.linspace(x[run[0]], x[run[-1] + 1], 8 * run.size + 1)
        sub = _sign_change_cells(deriv(fine))
        if np.any(np.diff(sub) == 1):
            raise UnresolvedOscillationError(
                f"derivative oscillates faster than the scan resolves near alpha = {fine[sub[0]]:.6g}"
            )
        out.extend((fine[i], fine[i + 1]) for i in sub)
    return out


def _critical_points(m, x, d):
    crits = []
    flat = np.abs(d) < ZERO_DERIV
    if np.any(flat):
        idx = np.nonzero(flat)[0]
        for run in np.split(idx, np.nonzero(np.diff(idx) != 1)[0] + 1):
            crits.append(x[run[np.argmin(np.abs(d[run]))]])
    cells = _refine_clusters(m.derivative, x, _sign_change_cells(d))
    if cells:
        left = np.array([c[0] for c in cells])
        right = np.array([c[1] for c in cells])
        roots, left, right = _bisect_sign_changes(m.derivative, left, right)
        d2 = getattr(m, "deriv2", None) if not isinstance(m, LegendreSeries) else m.second_derivative
        if d2 is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                polished = roots - m.derivative(roots) / d2(roots)
            ok = np.isfinite(polished) & (polished >= left) & (polished <= right)
            roots = np.where(ok, polished, roots)
        crits.extend(roots.tolist())
    crits = np.unique(np.array(crits, dtype=float))
    crits = crits[(crits > -1.0 + 1e-12) & (crits < 1.0 - 1e-12)]
    if crits.size > 1:
        crits = crits[np.concatenate([[True], np.diff(crits) > 1e-12])]
    return crits


def _unique_sorted(values, tol=1e-12):
    v = np.sort(np.asarray(values, dtype=float))
    if v.size > 1:
        v = v[np.concatenate([[True], np.diff(v) > tol])]
    return v


def monotone_decomposition(m, scan_resolution: int = 4096) -> PiecewiseMonotoneMap:
    """Split a map into monotone branches at the zeros of its derivative.

    Sign changes of f' on a uniform scan are located by bisection to within
    1e-13 and polished by one Newton step when f'' is available; scan points
    with |f'| < 1e-10 are recorded as critical points even without a sign
    change.
    """
    if scan_resolution < 256:
        raise PreconditionError("scan_resolution must be >= 256")
    m = _as_map(m)
    x = np.linspace(-1.0, 1.0, scan_resolution + 1)
    d = m.derivative(x)
    if not np.all(np.isfinite(d)):
        raise NumericalError("derivative is not finite on the scan grid")
    crits = _critical_points(m, x, d)
    ends = np.concatenate([[-1.0], crits, [1.0]])
    values = np.asarray(m(ends), dtype=float)
    k = (np.arange(BRANCH_PROBES) + 0.5) / BRANCH_PROBES
    branches = []
    for i in range(ends.size - 1):
        a, b = ends[i], ends[i + 1]
        probes = m.derivative(a + (b - a) * k)
        signs = np.sign(probes[np.abs(probes) >= ZERO_DERIV])
        if signs.size == 0:
            raise NumericalError(f"map is flat on [{a:.6g}, {b:.6g}]; the pushforward has an atom")
        if np.any(signs != signs[0]):
            raise UnresolvedOscillationError(f"derivative changes sign inside [{a:.6g}, {b:.6g}]")
        branches.append(Branch(float(a), float(b), int(signs[0]), float(values[i]), float(values[i + 1])))
    far = np.ones(x.size, dtype=bool)
    for c in crits:
        far &= np.abs(x - c) >= KAPPA_EXCLUSION
    kappa = float(np.min(np.abs(d[far]))) if np.any(far) else 0.0
    singular = [values[i + 1] for i, c in enumerate(crits) if abs(float(m.derivative(np.array([c]))[0])) <= SINGULAR_DERIV]
    support = (float(min(b.lo for b in branches)), float(max(b.hi for b in branches)))
    return PiecewiseMonotoneMap(
        map=m,
        critical_points=crits,
        branches=tuple(branches),
        kappa=kappa,
        support=support,
        singular_values=_unique_sorted(singular),
        breakpoint_values=_unique_sorted(values),
    )


def _decomposed(pm):
    return pm if isinstance(pm, PiecewiseMonotoneMap) else monotone_decomposition(pm)


# -- exact density and CDF ---------------------------------------------------


def evaluate(pm: PiecewiseMonotoneMap, rho, ys, want_cdf: bool = True):
    """Density and CDF of f_# rho at every y; one root solve per branch serves both.

    The density is +inf within 1e-12 of a singular critical-value image.
    """
    rho = as_density(rho)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    pdf = np.zeros(ys.shape)
    cdf = np.zeros(ys.shape) if want_cdf else None
    m = pm.map
    for br in pm.branches:
        inside = (ys >= br.lo) & (ys <= br.hi)
        if np.any(inside):
            alpha = pm.invert(br, ys[inside])
            with np.errstate(divide="ignore"):
                pdf[inside] += rho(alpha) / np.abs(m.derivative(alpha))
            if want_cdf:
                if br.direction > 0:
                    cdf[inside] += rho.cdf(alpha) - rho.cdf(br.a)
                else:
                    cdf[inside] += rho.cdf(br.b) - rho.cdf(alpha)
        if want_cdf:
            cdf[ys > br.hi] += rho.cdf(br.b) - rho.cdf(br.a)
    for s in pm.singular_values:
        pdf[np.abs(ys - s) <= SINGULAR_GAP] = np.inf
    pdf[np.isnan(pdf)] = np.inf
    if want_cdf:
        np.clip(cdf, 0.0, 1.0, out=cdf)
    return pdf, cdf


def _scalar_or_array(y, out):
    return float(out[0]) if np.ndim(y) == 0 else out


def pdf(pm, rho, y):
    """Density of the pushforward at y (``inf`` at singular critical images)."""
    pm = _decomposed(pm)
    return _scalar_or_array(y, evaluate(pm, rho, y, want_cdf=False)[0])


def cdf(pm, rho, y):
    """rho-measure of {alpha : f(alpha) <= y}."""
    pm = _decomposed(pm)
    return _scalar_or_array(y, evaluate(pm, rho, y)[1])


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """A tabulated density with the callables needed to re-evaluate it elsewhere."""

    ys: np.ndarray
    values: np.ndarray
    support: tuple
    singular_points: tuple = ()
    breakpoints: np.ndarray = field(default_factory=lambda: np.empty(0))
    pdf_fn: Optional[Callable] = field(default=None, repr=False)
    cdf_fn: Optional[Callable] = field(default=None, repr=False)
    edges: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def mass(self) -> float:
        if self.edges is not None:
            return float(np.dot(self.values, np.diff(self.edges)))
        return float(np.trapezoid(self.values, self.ys))

    @property
    def mass_tolerance(self) -> float:
        return 0.02 if len(self.singular_points) else 1e-6

    def check(self) -> None:
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise NumericalError("density grid has negative or non-finite values")
        if abs(self.mass - 1.0) > self.mass_tolerance:
            raise NumericalError(f"density grid mass {self.mass:.8g} outside 1 +- {self.mass_tolerance:g}")

    def __call__(self, ys):
        ys = np.asarray(ys, dtype=float)
        if self.pdf_fn is not None:
            return self.pdf_fn(ys)
        return np.interp(ys, self.ys, self.values, left=0.0, right=0.0)


def cluster_points(centers, lo, hi, min_distance=CLUSTER_MIN, per_decade=CLUSTER_PER_DECADE):
    """Geometric refinement on both sides of every center.

    Points reach ``0.5 * (hi - lo)`` away from each center and are not
    clipped to [lo, hi]; callers clip to the interval they need.
    """
    width = hi - lo
    if width <= 0 or len(centers) == 0:
        return np.empty(0)
    dmax = 0.5 * width
    count = int(np.ceil(per_decade * np.log10(dmax / min_distance))) + 1
    d = np.geomspace(dmax, min_distance, max(count, 2))
    return (np.asarray(centers)[:, None] + np.concatenate([-d, d])[None, :]).ravel()


def pdf_grid(pm, rho, base_points: int = 2048) -> DensityGrid:
    """Tabulate the pushforward density on a grid refined at every branch image.

    The grid is a uniform base grid on the support plus geometric clusters
    (12 points per decade, down to 1e-10) on both sides of every branch-end
    image, so jumps and 1/sqrt-type singularities are both resolved.
    """
    if base_points < 64:
        raise PreconditionError("base_points must be >= 64")
    pm = _decomposed(pm)
    rho = as_density(rho)
    lo, hi = pm.support
    ys = np.union1d(np.linspace(lo, hi, base_points), cluster_points(pm.breakpoint_values, lo, hi))
    ys = ys[(ys >= lo) & (ys <= hi)]
    for s in pm.singular_values:
        ys = ys[np.abs(ys - s) > SINGULAR_GAP]
    values = evaluate(pm, rho, ys, want_cdf=False)[0]
    grid = DensityGrid(
        ys=ys,
        values=values,
        support=pm.support,
        singular_points=tuple(float(s) for s in pm.singular_values),
        breakpoints=pm.breakpoint_values,
        pdf_fn=lambda y: evaluate(pm, rho, y, want_cdf=False)[0],
        cdf_fn=lambda y: evaluate(pm, rho, y)[1],
    )
    grid.check()
    return grid


# -- quantiles ---------------------------------------------------------------


def quantile(pm, rho, t, tol: float = 1e-12, maxiter: int = 100):
    """Smallest y with cdf(y) = t, for t in (0, 1); vectorized over t.

    The CDF is tabulated once to bracket every t, then each bracket is
    shrunk by Newton steps on cdf(y) - t (the density is its derivative)
    with bisection as the fallback.
    """
    pm = _decomposed(pm)
    rho = as_density(rho)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(~((t_arr > 0) & (t_arr < 1))):
        raise PreconditionError("quantile levels must lie in (0, 1)")
    lo, hi = pm.support
    tab_y = np.union1d(np.linspace(lo, hi, 257), pm.breakpoint_values)
    tab_f = evaluate(pm, rho, tab_y)[1]
    tab_f[0], tab_f[-1] = 0.0, 1.0
    tab_f = np.maximum.accumulate(tab_f)
    j = np.clip(np.searchsorted(tab_f, t_arr, side="left"), 1, tab_y.size - 1)
    a = tab_y[j - 1].copy()
    b = tab_y[j].copy()
    fa, fb = tab_f[j - 1], tab_f[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(fb > fa, a + (b - a) * (t_arr - fa) / (fb - fa), 0.5 * (a + b))
    y = np.clip(y, a, b)
    active = np.arange(t_arr.size)
    for _ in range(maxiter):
        if active.size == 0:
            break
        yi = y[active]
        p, F = evaluate(pm, rho, yi)
        r = F - t_arr[active]
        ai = np.where(r < 0, yi, a[active])
        bi = np.where(r < 0, b[active], yi)
        with np.errstate(divide="ignore", invalid="ignore"):
            yn = yi - r / p
        bad = ~np.isfinite(yn) | (yn <= ai) | (yn >= bi)
        yn = np.where(bad, 0.5 * (ai + bi), yn)
        scale = 1.0 + np.abs(yi)
        done = (np.abs(r) <= tol) | (bi - ai <= 4e-16 * scale)
        y[active] = np.where(done, yi, yn)
        a[active], b[active] = ai, bi
        active = active[~done]
    order = np.argsort(t_arr, kind="stable")
    y[order] = np.maximum.accumulate(y[order])
    return float(y[0]) if np.ndim(t) == 0 else y


# -- Monte Carlo oracle ------------------------------------------------------


def generator(seed: int, task: int = 0) -> np.random.Generator:
    """Counter-based Philox stream keyed by SeedSequence([seed, task])."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) % 2 ** 64, int(task)])))


def sample_pushforward(pm, rho, count: int, seed: int, task: int = 0) -> np.ndarray:
    """``count`` draws of f(alpha) with alpha ~ rho, reproducible from (seed, task).

    Uniform variates u come from :func:`generator` and are mapped through the
    inverse CDF of rho (alpha = 2u - 1 for the uniform density).
    """
    if count < 1:
        raise PreconditionError("count must be >= 1")
    m = _as_map(pm)
    rho = as_density(rho)
    u = generator(seed, task).random(int(count))
    return np.asarray(m(rho.ppf(u)), dtype=float)


def default_bins(count: int) -> int:
    return int(min(max(round(count ** (1.0 / 3.0)), 50), 2000))


def histogram_density(samples, bins: int, support) -> DensityGrid:
    """Normalized histogram on ``bins`` equal cells of ``support``.

    Samples outside the support are counted in the end bins.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise PreconditionError("histogram of an empty sample")
    if bins < 2:
        raise PreconditionError("bins must be >= 2")
    lo, hi = float(support[0]), float(support[1])
    if not hi > lo:
        raise PreconditionError("support must have positive length")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.clip(samples, lo, hi), bins=edges)
    h = (hi - lo) / bins
    values = counts / (samples.size * h)
    cum = np.concatenate([[0.0], np.cumsum(counts) / samples.size])

    def step(y):
        y = np.asarray(y, dtype=float)
        k = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, bins - 1)
        return np.where((y >= lo) & (y <= hi), values[k], 0.0)

    return DensityGrid(
        ys=0.5 * (edges[:-1] + edges[1:]),
        values=values,
        support=(lo, hi),
        breakpoints=edges,
        pdf_fn=step,
        cdf_fn=lambda y: np.interp(y, edges, cum),
        edges=edges,
    )
