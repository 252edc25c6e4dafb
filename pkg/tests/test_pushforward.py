import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpcpdf.errors import PreconditionError, RegistryError, UnresolvedOscillationError
from gpcpdf.legendre import LegendreSeries
from gpcpdf.pushforward import (
    DENSITIES,
    as_density,
    cdf,
    default_bins,
    get_density,
    histogram_density,
    monotone_decomposition,
    pdf,
    pdf_grid,
    quantile,
    sample_pushforward,
)
from gpcpdf.surrogate import FUNCTION_NAMES, QuantityOfInterest, fit, get_function


class TestDensities:
    @pytest.mark.parametrize("name", sorted(DENSITIES))
    def test_normalized(self, name):
        get_density(name).validate()

    @pytest.mark.parametrize("name", sorted(DENSITIES))
    def test_cdf_and_ppf_are_inverse(self, name):
        rho = get_density(name)
        u = np.linspace(0.01, 0.99, 25)
        np.testing.assert_allclose(rho.cdf(rho.ppf(u)), u, atol=1e-12)

    @pytest.mark.parametrize("name", sorted(DENSITIES))
    def test_derivative(self, name):
        rho = get_density(name)
        x = np.linspace(-0.9, 0.9, 11)
        h = 1e-6
        np.testing.assert_allclose(rho.r_deriv(x), (rho(x + h) - rho(x - h)) / (2 * h), atol=1e-6)

    def test_unknown(self):
        with pytest.raises(RegistryError):
            get_density("gaussian")

    def test_default_is_uniform(self):
        assert as_density(None).id == "uniform"


class TestDecomposition:
    def test_square(self):
        pm = monotone_decomposition(get_function("square"))
        np.testing.assert_allclose(pm.critical_points, [0.0], atol=1e-13)
        assert len(pm.branches) == 2
        assert pm.support == pytest.approx((0.0, 1.0), abs=1e-15)
        assert [b.direction for b in pm.branches] == [-1, 1]

    def test_sin20(self):
        pm = monotone_decomposition(get_function("sin20"))
        expected = (np.pi / 2 + np.pi * np.arange(-6, 6)) / 20
        np.testing.assert_allclose(pm.critical_points, expected, atol=1e-13)
        assert len(pm.branches) == 13

    def test_cubic_mono(self):
        pm = monotone_decomposition(get_function("cubic_mono"))
        assert pm.critical_points.size == 0
        assert len(pm.branches) == 1 and pm.branches[0].direction == 1
        assert pm.kappa == pytest.approx(2.0, abs=1e-6)

    def test_even_order_zero(self):
        # alpha**3 has f'(0) = 0 without a sign change
        pm = monotone_decomposition(get_function("poly:0,0,0,1"))
        np.testing.assert_allclose(pm.critical_points, [0.0], atol=1e-12)
        assert [b.direction for b in pm.branches] == [1, 1]

    def test_branches_partition_domain(self):
        pm = monotone_decomposition(fit(get_function("sin20"), 40))
        assert pm.branches[0].a == -1.0 and pm.branches[-1].b == 1.0
        for left, right in zip(pm.branches, pm.branches[1:]):
            assert left.b == right.a
            assert left.direction == -right.direction

    def test_unresolved_oscillation(self):
        f = QuantityOfInterest("fast", lambda a: np.sin(3000 * a), lambda a: 3000 * np.cos(3000 * a))
        with pytest.raises(UnresolvedOscillationError):
            monotone_decomposition(f, scan_resolution=256)

    def test_scan_resolution_floor(self):
        with pytest.raises(PreconditionError):
            monotone_decomposition(get_function("square"), scan_resolution=100)


class TestPdfCdf:
    def test_identity(self):
        assert pdf(get_function("identity"), "uniform", 0.3) == pytest.approx(0.5, abs=1e-14)
        assert cdf(get_function("identity"), "uniform", 0.0) == pytest.approx(0.5, abs=1e-14)

    def test_square(self):
        f = get_function("square")
        assert pdf(f, "uniform", 0.25) == pytest.approx(1.0, abs=1e-8)
        assert cdf(f, "uniform", 0.25) == pytest.approx(0.5, abs=1e-12)
        y = np.linspace(0.01, 0.99, 50)
        np.testing.assert_allclose(pdf(f, "uniform", y), 0.5 / np.sqrt(y), rtol=1e-8)

    def test_affine(self):
        f = get_function("affine:2,1")
        np.testing.assert_allclose(pdf(f, "uniform", np.linspace(-0.99, 2.99, 21)), 0.25, atol=1e-14)
        assert pdf(f, "uniform", 4.0) == 0.0

    def test_outside_support(self):
        f = get_function("sin20")
        assert cdf(f, "uniform", -2.0) == 0.0
        assert cdf(f, "uniform", 2.0) == 1.0

    def test_singular_image_is_infinite(self):
        assert pdf(get_function("square"), "uniform", 0.0) == np.inf

    @pytest.mark.parametrize("name", ["cubic_mono", "exp", "affine:-3,0.5"])
    @pytest.mark.parametrize("rho", sorted(DENSITIES))
    def test_change_of_variables(self, name, rho, rng):
        f = get_function(name)
        rho = get_density(rho)
        pm = monotone_decomposition(f)
        alpha = rng.uniform(-0.99, 0.99, 200)
        y = f(alpha)
        np.testing.assert_allclose(pdf(pm, rho, y) * np.abs(f.derivative(alpha)), rho(alpha), atol=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3).filter(lambda a: abs(a) > 0.05), st.floats(-2, 2))
    def test_affine_equivariance(self, a, b):
        base = monotone_decomposition(get_function("sin20"))
        moved = monotone_decomposition(
            QuantityOfInterest("m", lambda x: a * np.sin(20 * x) + b, lambda x: 20 * a * np.cos(20 * x))
        )
        y = np.linspace(-0.95, 0.95, 17)
        np.testing.assert_allclose(pdf(moved, "uniform", a * y + b), pdf(base, "uniform", y) / abs(a), rtol=1e-10)

    @pytest.mark.parametrize("name", ["sin20", "square", "abs_cubed", "exp", "abs_shift"])
    def test_cdf_is_integral_of_pdf(self, name):
        pm = monotone_decomposition(get_function(name))
        grid = pdf_grid(pm, "uniform")
        running = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(grid.ys) * (grid.values[1:] + grid.values[:-1]))])
        tol = 2e-2 if grid.singular_points else 1e-6
        probe = np.linspace(0, grid.ys.size - 1, 40).astype(int)
        np.testing.assert_allclose(running[probe], cdf(pm, "uniform", grid.ys[probe]), atol=tol)


class TestGrid:
    def test_identity(self):
        grid = pdf_grid(get_function("identity"), "uniform")
        np.testing.assert_allclose(grid.values, 0.5, atol=1e-14)
        assert grid.singular_points == ()

    def test_square_mass(self):
        grid = pdf_grid(get_function("square"), "uniform")
        assert 0.98 <= grid.mass <= 1.02

    def test_sin20_singular_points(self):
        grid = pdf_grid(get_function("sin20"), "uniform")
        np.testing.assert_allclose(grid.singular_points, [-1.0, 1.0], atol=1e-12)

    def test_refinement_reaches_min_distance(self):
        grid = pdf_grid(get_function("square"), "uniform")
        assert grid.ys[0] > 0 and grid.ys[0] <= 2e-10

    def test_base_points_floor(self):
        with pytest.raises(PreconditionError):
            pdf_grid(get_function("square"), "uniform", base_points=10)

    @pytest.mark.parametrize("name", FUNCTION_NAMES)
    def test_mass_invariant(self, name):
        grid = pdf_grid(get_function(name), "uniform")
        assert np.all(grid.values >= 0)
        assert abs(grid.mass - 1) <= grid.mass_tolerance


class TestQuantile:
    def test_identity(self):
        assert quantile(get_function("identity"), "uniform", 0.75) == pytest.approx(0.5, abs=1e-12)

    def test_square(self):
        assert quantile(get_function("square"), "uniform", 0.5) == pytest.approx(0.25, abs=1e-10)

    def test_inverse_pair(self):
        pm = monotone_decomposition(get_function("cubic_mono"))
        y = np.linspace(-2.9, 2.9, 30)
        np.testing.assert_allclose(quantile(pm, "uniform", cdf(pm, "uniform", y)), y, atol=1e-8)

    @pytest.mark.parametrize("name", ["sin20", "abs_cubed", "abs_shift"])
    def test_accuracy_and_monotonicity(self, name):
        pm = monotone_decomposition(get_function(name))
        t = np.linspace(0.001, 0.999, 300)
        y = quantile(pm, "uniform", t)
        assert np.all(np.diff(y) >= 0)
        assert np.max(np.abs(cdf(pm, "uniform", y) - t)) <= 1e-10

    @pytest.mark.parametrize("t", [0.0, 1.0, -0.1])
    def test_levels_outside(self, t):
        with pytest.raises(PreconditionError):
            quantile(get_function("identity"), "uniform", t)


class TestSampling:
    def test_mean(self):
        s = sample_pushforward(get_function("identity"), "uniform", 10 ** 6, seed=1)
        assert abs(s.mean()) <= 0.002

    def test_deterministic(self):
        f = get_function("sin20")
        assert np.array_equal(sample_pushforward(f, "uniform", 1000, 5), sample_pushforward(f, "uniform", 1000, 5))
        assert not np.array_equal(sample_pushforward(f, "uniform", 1000, 5), sample_pushforward(f, "uniform", 1000, 6))

    def test_task_streams_differ(self):
        f = get_function("identity")
        assert not np.array_equal(sample_pushforward(f, None, 100, 5, 0), sample_pushforward(f, None, 100, 5, 1))

    def test_square_median(self):
        s = sample_pushforward(get_function("square"), "uniform", 10 ** 6, seed=2)
        assert 0.498 <= np.mean(s <= 0.25) <= 0.502

    def test_nonuniform_density(self):
        s = sample_pushforward(get_function("identity"), "cosine", 10 ** 5, seed=3)
        assert abs(np.mean(s <= 0.5) - get_density("cosine").cdf(0.5)) < 0.005

    def test_count(self):
        with pytest.raises(PreconditionError):
            sample_pushforward(get_function("identity"), "uniform", 0, 1)

    def test_series_map(self):
        s = LegendreSeries(np.array([0.0, np.sqrt(2 / 3)]))  # the identity
        np.testing.assert_allclose(
            sample_pushforward(s, "uniform", 50, 9), sample_pushforward(get_function("identity"), "uniform", 50, 9)
        )


class TestHistogram:
    def test_uniform_bins(self):
        s = sample_pushforward(get_function("identity"), "uniform", 10 ** 6, seed=4)
        h = histogram_density(s, 100, (-1, 1))
        assert np.all((h.values >= 0.45) & (h.values <= 0.55))
        assert h.mass == pytest.approx(1.0, abs=1e-12)

    def test_point_mass(self):
        h = histogram_density(np.full(10, 0.3), 20, (0, 1))
        assert np.count_nonzero(h.values) == 1
        assert h.values.max() == pytest.approx(20.0)

    def test_clipping_to_end_bins(self):
        h = histogram_density(np.array([-5.0, 0.5, 5.0]), 4, (0, 1))
        assert h.values[0] > 0 and h.values[-1] > 0

    def test_monte_carlo_scaling(self):
        f = get_function("identity")
        ratios = []
        for seed in range(5):
            small = histogram_density(sample_pushforward(f, None, 200_000, seed, 0), 100, (-1, 1))
            large = histogram_density(sample_pushforward(f, None, 400_000, seed, 1), 100, (-1, 1))
            ratios.append(np.max(np.abs(small.values - 0.5)) / np.max(np.abs(large.values - 0.5)))
        assert 1.1 <= np.mean(ratios) <= 1.9

    def test_empty(self):
        with pytest.raises(PreconditionError):
            histogram_density(np.array([]), 10, (0, 1))

    def test_bins_floor(self):
        with pytest.raises(PreconditionError):
            histogram_density(np.ones(3), 1, (0, 2))

    @pytest.mark.parametrize("count,bins", [(1000, 50), (10 ** 6, 100), (10 ** 10, 2000)])
    def test_default_bins(self, count, bins):
        assert default_bins(count) == bins


@pytest.mark.parametrize("name", FUNCTION_NAMES)
def test_binned_oracle_agreement(name):
    """Bin probabilities from the exact CDF against 10**6-sample histogram counts.

    Unlike a pointwise comparison this carries no binning bias, so it isolates
    the Monte Carlo error (about 0.011 at 200 bins).
    """
    pm = monotone_decomposition(get_function(name))
    h = histogram_density(sample_pushforward(pm, "uniform", 10 ** 6, seed=6), 200, pm.support)
    exact = np.diff(cdf(pm, "uniform", h.edges))
    observed = h.values * np.diff(h.edges)
    assert np.sum(np.abs(exact - observed)) <= 0.02
