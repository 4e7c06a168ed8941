import math

import pytest

from stargraph_ssf.models import StarGraph
from stargraph_ssf.potentials import SquareWell, ZeroPotential


@pytest.fixture(params=[2, 3, 5])
def free_graph(request) -> StarGraph:
    return StarGraph.free(request.param)


@pytest.fixture
def unit_well() -> SquareWell:
    return SquareWell(depth=-1.0, width=1.0)


@pytest.fixture
def tuned_well() -> SquareWell:
    return SquareWell(depth=-((math.pi / 2) ** 2), width=1.0)


@pytest.fixture
def one_well_graph() -> StarGraph:
    return StarGraph(
        edges=[SquareWell(depth=-4.0, width=1.0), ZeroPotential(), ZeroPotential()]
    )


@pytest.fixture
def unit_well_graph(unit_well) -> StarGraph:
    return StarGraph(edges=[unit_well, ZeroPotential(), ZeroPotential()])


@pytest.fixture
def symmetric_pair() -> StarGraph:
    """Two equal wells on a two-edge graph: the even square well on the line."""
    return StarGraph(
        edges=[SquareWell(depth=-4.0, width=1.0), SquareWell(depth=-4.0, width=1.0)]
    )


@pytest.fixture(params=[1, 2, 3])
def tuned_graph(request) -> StarGraph:
    return StarGraph.tuned_resonant(4, request.param)


@pytest.fixture
def random_corpus() -> list:
    return [StarGraph.random_wells(seed) for seed in range(20)]


@pytest.fixture
def config_text() -> str:
    return """
output_dir = "out"
seed = 7
tasks = ["levinson", "ssf_curve", "levinson"]

[graph]
n = 2

[[graph.edges]]
kind = "zero"

[[graph.edges]]
kind = "zero"
"""
