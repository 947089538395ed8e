import numpy as np
import pytest

from stagnet import _accel
from stagnet.population import Population, SocialNetwork, build_physical_network

BACKENDS = ["numpy"] + (["numba"] if _accel.HAS_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


def make_population(positions, strategies, social_edges=(), radius=0.1):
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    return Population(
        positions,
        build_physical_network(positions, radius),
        SocialNetwork(n, social_edges),
        np.asarray(strategies, dtype=float).copy(),
    )


def far_apart(n):
    """Positions on a line with gaps larger than any test radius."""
    return np.column_stack([np.arange(n) * 10.0, np.zeros(n)])


def check_graph_invariants(pop):
    s = pop.social
    for i in range(pop.n):
        nbrs = s.neighbors(i)
        assert i not in nbrs
        assert len(nbrs) == len(set(nbrs))
        for j in nbrs:
            assert s.has_edge(j, i)
    phys = pop.physical
    assert np.all(phys.pairs_i < phys.pairs_j)
    assert np.all((pop.strategies >= 0) & (pop.strategies <= 1))


# acceptance tests push "criterion N: PASS/FAIL ..." lines here; printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
