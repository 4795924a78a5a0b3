import pytest

from causalvote.branch_graph import build_branch_graph
from causalvote.routed_graph import build_gamma
from causalvote.validity import choice_relation
from causalvote.vote_model import ModelParams, allowed_table


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def gamma(params):
    return build_gamma(params)


@pytest.fixture(scope="session")
def table(params):
    return allowed_table(params)


@pytest.fixture(scope="session")
def rel(gamma):
    return choice_relation(gamma)


@pytest.fixture(scope="session")
def branch_graph(gamma, rel):
    return build_branch_graph(gamma, rel)
