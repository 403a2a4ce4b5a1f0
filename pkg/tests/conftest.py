import sys

import numpy as np
import pytest

from rkbs_lab.kernels import Kernel

CATALOG = {
    "brownian": Kernel.brownian(),
    "bridge": Kernel.bridge(),
    "rbf": Kernel.rbf(0.3),
    "matern12": Kernel.matern12(0.5),
    "spectrum": Kernel.spectrum([1.0 / k**2 for k in range(1, 21)]),
}


@pytest.fixture(params=sorted(CATALOG))
def catalog_kernel(request):
    return CATALOG[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
