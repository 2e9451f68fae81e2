import numpy as np
import pytest

from windcast.features import build_rows, split_chronological
from windcast.ingest import generate_synthetic, validate_cadence
from windcast.kernels import load_backend


@pytest.fixture(scope="session")
def small_dataset():
    series = generate_synthetic(3, 600, "mixed")
    return split_chronological(build_rows(validate_cadence(series).segments))


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    return load_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20190601)


_ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
