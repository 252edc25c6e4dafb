"""Both kernel backends must agree with each other and with numpy references."""
import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from gpcpdf import _pykernels
from gpcpdf._backend import BACKEND, available_backends, get_kernels
from gpcpdf.errors import ConvergenceError


def test_python_backend_always_available():
    assert "python" in available_backends()
    assert get_kernels("python") is _pykernels


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_kernels("fortran")


def test_clenshaw(kern, rng):
    c = rng.uniform(-1, 1, 60)
    x = np.linspace(-1, 1, 301)
    np.testing.assert_allclose(kern.clenshaw(c, x), npleg.legval(x, c), atol=1e-12)
    assert kern.clenshaw(np.array([2.5]), np.array([0.3]))[0] == 2.5


def test_clenshaw_keeps_shape(kern):
    x = np.zeros((3, 4))
    assert kern.clenshaw(np.ones(3), x).shape == (3, 4)


@pytest.mark.parametrize("N", [1, 2, 3, 10, 101, 400])
def test_gauss_legendre_nodes(kern, N):
    nodes, dp = kern.gauss_legendre_nodes(N)
    ref = npleg.leggauss(N)[0]
    np.testing.assert_allclose(nodes, ref, atol=1e-14)
    np.testing.assert_allclose(dp, npleg.legval(ref, npleg.legder(np.eye(N + 1)[N])), rtol=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4, 9, 100])
def test_gauss_lobatto_interior(kern, N):
    nodes, p = kern.gauss_lobatto_interior(N)
    assert nodes.size == N - 2
    if N > 2:
        e = np.eye(N)[N - 1]
        np.testing.assert_allclose(npleg.legval(nodes, npleg.legder(e)), 0, atol=1e-13 * N ** 3)
        np.testing.assert_allclose(p, npleg.legval(nodes, e), atol=1e-14)


def test_backends_agree_on_nodes():
    if len(available_backends()) < 2:
        pytest.skip("compiled backend not built")
    c, py = get_kernels("cython"), get_kernels("python")
    for N in (5, 64, 1000):
        np.testing.assert_allclose(c.gauss_legendre_nodes(N)[0], py.gauss_legendre_nodes(N)[0], atol=2e-16)
        np.testing.assert_allclose(c.gauss_lobatto_interior(N)[0], py.gauss_lobatto_interior(N)[0], atol=2e-16)


def test_invert_series(kern):
    # x**3 + 2x in the standard Legendre basis, increasing on [-1, 1]
    std = npleg.poly2leg([0, 2, 0, 1])
    d = npleg.legder(std)
    ys = np.linspace(-3, 3, 101)
    x = kern.invert_series(std, d, -1.0, 1.0, -3.0, 3.0, ys)
    np.testing.assert_allclose(x ** 3 + 2 * x, ys, atol=1e-14)


def test_invert_decreasing_branch(kern):
    std = npleg.poly2leg([0, 0, 1])  # alpha**2, decreasing on [-1, 0]
    d = npleg.legder(std)
    ys = np.linspace(0, 1, 51)
    x = kern.invert_series(std, d, -1.0, 0.0, 1.0, 0.0, ys)
    np.testing.assert_allclose(x, -np.sqrt(ys), atol=1e-8)
    assert np.all(x <= 0)


def test_invert_monotone_callable():
    ys = np.linspace(np.exp(-1), np.e, 40)
    x = _pykernels.invert_monotone(np.exp, np.exp, -1.0, 1.0, np.exp(-1), np.e, ys)
    np.testing.assert_allclose(x, np.log(ys), atol=1e-15)


def test_convergence_error_names_node():
    with pytest.raises(ConvergenceError) as info:
        _pykernels.gauss_legendre_nodes(20, tol=0.0, maxiter=1)
    assert info.value.index is not None


def test_pure_python_switch():
    env = dict(os.environ, GPCPDF_PURE_PYTHON="1")
    code = "from gpcpdf import BACKEND, gauss_legendre_rule as g; print(BACKEND, g(3).weights.sum())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, total = out.stdout.split()
    assert name == "python"
    assert abs(float(total) - 2) < 1e-14


def test_default_backend_is_preferred():
    if os.environ.get("GPCPDF_PURE_PYTHON"):
        assert BACKEND == "python"
    else:
        assert BACKEND == available_backends()[0]


def test_backends_agree_on_series_kernels(rng):
    if len(available_backends()) < 2:
        pytest.skip("compiled backend not built")
    c, py = get_kernels("cython"), get_kernels("python")
    coeffs = rng.uniform(-1, 1, 80)
    x = rng.uniform(-1, 1, 500)
    np.testing.assert_allclose(c.clenshaw(coeffs, x), py.clenshaw(coeffs, x), atol=1e-13)
    std = np.polynomial.legendre.poly2leg([0.1, 2, 0, 1])
    d = np.polynomial.legendre.legder(std)
    ys = np.linspace(-2.8, 3.0, 200)
    np.testing.assert_allclose(
        c.invert_series(std, d, -1.0, 1.0, -2.9, 3.1, ys), py.invert_series(std, d, -1.0, 1.0, -2.9, 3.1, ys), atol=1e-15
    )
