import sys

import numpy as np
import pytest

from gpcpdf._backend import available_backends, get_kernels


@pytest.fixture(params=available_backends())
def kern(request):
    return get_kernels(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    """Print the per-criterion verdicts collected by test_acceptance.py."""
    module = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(results):
            terminalreporter.write_line(line)
