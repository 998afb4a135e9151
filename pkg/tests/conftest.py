import numpy as np
import pytest

from wavetrace.geometry import circle, ellipse, fourier, graph_pair


@pytest.fixture(scope="session")
def unit_circle():
    return circle(1.0)


@pytest.fixture(scope="session")
def ell():
    return ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def flower():
    return fourier([1.0, 0.0, 0.0, 0.05])


@pytest.fixture(scope="session")
def sym_graph():
    fp = [1.0, 0.0, -0.3, 0.0, -0.05]
    return graph_pair(fp, [-v for v in fp])


@pytest.fixture(scope="session")
def curves(unit_circle, ell, flower, sym_graph):
    return {"circle": unit_circle, "ellipse": ell, "fourier": flower, "graph_pair": sym_graph}


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
