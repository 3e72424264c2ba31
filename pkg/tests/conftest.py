import numpy as np
import pytest

from mqcont import basis
from mqcont.collocation import build_system
from mqcont.problems import catalog


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_system(problem_id, Ns, s, distribution="uniform", h1=None, params=None):
    entry = catalog(problem_id, params)
    nodes = basis.generate_nodes(entry.problem.dim, Ns, distribution, h1)
    return entry, build_system(entry.problem, nodes, basis.shape_params(nodes, s))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
