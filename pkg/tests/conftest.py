import importlib

import pytest

from aqmark import _pykernels

BACKENDS = [pytest.param(_pykernels, id="python")]
try:
    BACKENDS.append(pytest.param(importlib.import_module("aqmark._kernels"), id="compiled"))
except ImportError:
    pass


@pytest.fixture(params=BACKENDS)
def kern(request):
    """Each kernel backend that is importable in this environment."""
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
