import numpy as np
import pytest

from pcrca import example3
from pcrca.graph import CausalGraph


def confounded_graph() -> CausalGraph:
    """X and Y confounded by U1, Z mediates X -> Y with its own noise U2."""
    return CausalGraph.from_edges(
        ["X", "Y", "Z"],
        ["U1", "U2"],
        [("U1", "X"), ("U1", "Y"), ("U2", "Z"), ("X", "Z"), ("Z", "Y")],
    )


@pytest.fixture
def confounded():
    return confounded_graph()


@pytest.fixture
def mediator_graph():
    return example3.graph()


@pytest.fixture
def example_dist():
    return example3.distribution()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
