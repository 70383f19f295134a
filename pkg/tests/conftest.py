import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lorentz_flow.lorentz import HyperplanePoint

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def unit_vectors(dim):
    return (st.lists(st.floats(-1, 1, allow_nan=False), min_size=dim, max_size=dim)
            .map(np.array).filter(lambda v: np.linalg.norm(v) > 0.1)
            .map(lambda v: v / np.linalg.norm(v)))


@st.composite
def hyperplanes(draw, dim=None):
    d = draw(st.integers(2, 4)) if dim is None else dim
    n = draw(unit_vectors(d))
    c = draw(st.floats(-5, 5, allow_nan=False))
    return HyperplanePoint(n, c)


@st.composite
def segment_pairs(draw, max_cos=-0.95):
    d = draw(st.integers(2, 4))
    z0 = draw(hyperplanes(d))
    z1 = draw(hyperplanes(d).filter(lambda z: z.normal @ z0.normal > max_cos))
    return z0, z1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the test summary
ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
