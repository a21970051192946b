import numpy as np
import pytest

from gibbsgraph.graph import Graph, cycle_graph, path_graph, star_graph
from gibbsgraph.potentials import ModelParams, builtin_potentials
from gibbsgraph.repulsive import HubPlan, RepulsionProfile, generate

CAT = builtin_potentials()


def make_model(pair="bilinear", site="double_well", J=0.3, **kw):
    return ModelParams(CAT["pair"][pair](J) if pair != "zero" else CAT["pair"]["zero"](),
                       CAT["site"][site](), **kw)


@pytest.fixture
def abc():
    """Path a-b-c rooted at the middle vertex b."""
    return Graph(3, [(0, 1), (1, 2)], root=1)


@pytest.fixture
def profile():
    return RepulsionProfile(3, 10.0, 1.0)


@pytest.fixture
def two_hub(profile):
    return generate(profile, HubPlan((5, 5), "ray", 20), seed=0)


@pytest.fixture
def model():
    return make_model()


def small_graphs():
    """Deterministic menagerie of small connected graphs for randomized checks."""
    out = [path_graph(4), cycle_graph(5), star_graph(4),
           Graph(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]),
           Graph(6, [(0, 1), (0, 2), (0, 3), (3, 4), (3, 5), (4, 5)], root=3)]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
