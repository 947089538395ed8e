import itertools

import numpy as np
import pytest

from stagnet.dynamics import run_to_convergence
from stagnet.experiments import DEFAULT_MODEL, DEFAULT_PLACEMENT
from stagnet.population import PlacementParams, SocialNetwork, build_population, rank_hubs
from stagnet.shocks import (
    ShockKind,
    ShockSpec,
    apply_shock,
    attack_hubs,
    break_connections,
    connect_defectors,
    drop_agents,
    measure_resilience,
    two_hop_pairs,
)

from conftest import check_graph_invariants, far_apart, make_population

PARAMS = DEFAULT_MODEL


def brute_two_hop(g: SocialNetwork, ok):
    out = set()
    for i, k in itertools.combinations(range(g.n), 2):
        if ok[i] and ok[k] and not g.has_edge(i, k) and set(g.neighbors(i)) & set(g.neighbors(k)):
            out.add((i, k))
    return out


@pytest.fixture(scope="module")
def converged():
    pop = build_population(200, PARAMS.radius, 2, DEFAULT_PLACEMENT, seed=0)
    state, _ = run_to_convergence(pop, PARAMS, np.random.default_rng(0))
    return state.population


class TestAttackHubs:
    def test_zero(self):
        pop = build_population(50, 0.1, 2, seed=0)
        before = pop.strategies.copy()
        attack_hubs(pop, 0, 0.3)
        assert np.array_equal(before, pop.strategies)

    def test_top30(self):
        pop = build_population(500, 0.05, 2, PlacementParams(layout="uniform"), seed=1)
        edges = pop.social.edges()
        hit = attack_hubs(pop, 30, 0.3)
        assert np.count_nonzero(pop.strategies == 0.3) >= 30
        assert set(hit.tolist()) == set(rank_hubs(pop.social)[:30].tolist())
        deg = pop.social.degrees()
        assert deg[hit].min() >= np.sort(deg)[-30]
        assert pop.social.edges() == edges

    def test_saturation(self):
        pop = build_population(40, 0.1, 2, seed=0)
        attack_hubs(pop, 40, 0.3)
        assert np.all(pop.strategies == 0.3)

    def test_too_many(self):
        with pytest.raises(ValueError):
            attack_hubs(build_population(10, 0.1, 2, seed=0), 11, 0.3)


class TestConnectDefectors:
    def test_probability_zero(self):
        pop = make_population(far_apart(3), [0.1, 0.2, 0.3], [(0, 1), (1, 2)])
        assert connect_defectors(pop, 0.0, np.random.default_rng(0)) == 0

    def test_path_of_three(self):
        pop = make_population(far_apart(3), [0.1, 0.2, 0.3], [(0, 1), (1, 2)])
        assert connect_defectors(pop, 1.0, np.random.default_rng(0)) == 1
        assert pop.social.has_edge(0, 2)

    def test_no_defectors(self):
        pop = make_population(far_apart(3), [0.9, 0.8, 0.7], [(0, 1), (1, 2)])
        assert connect_defectors(pop, 1.0, np.random.default_rng(0)) == 0

    def test_middle_may_be_a_cyclist(self):
        pop = make_population(far_apart(3), [0.1, 0.9, 0.3], [(0, 1), (1, 2)])
        assert connect_defectors(pop, 1.0, np.random.default_rng(0)) == 1

    def test_threshold_strict(self):
        pop = make_population(far_apart(3), [0.5, 0.2, 0.3], [(0, 1), (1, 2)])
        assert connect_defectors(pop, 1.0, np.random.default_rng(0)) == 0

    def test_deterministic_at_one(self):
        a = build_population(150, 0.1, 2, seed=3)
        b = a.copy()
        connect_defectors(a, 1.0, np.random.default_rng(0))
        connect_defectors(b, 1.0, np.random.default_rng(99))
        assert a.social == b.social

    def test_two_hop_enumeration_against_brute_force(self):
        pop = build_population(120, 0.1, 2, seed=5)
        ok = pop.strategies < 0.5
        got = two_hop_pairs(pop.social, ok)
        assert len(got) == len(set(got))
        assert set(got) == brute_two_hop(pop.social, ok)

    def test_one_draw_per_pair(self):
        # 0 and 2 share two middles; still only one candidate
        g = [(0, 1), (1, 2), (0, 3), (3, 2)]
        pop = make_population(far_apart(4), [0.1, 0.2, 0.3, 0.4], g)
        assert two_hop_pairs(pop.social, pop.strategies < 0.5) == [(0, 2), (1, 3)]


class TestBreakConnections:
    def test_zero(self):
        pop = build_population(80, 0.1, 2, seed=0)
        edges = pop.social.edges()
        assert break_connections(pop, 0.0, np.random.default_rng(0)) == 0
        assert pop.social.edges() == edges

    def test_one(self):
        pop = build_population(80, 0.1, 2, seed=0)
        phys = pop.physical.n_edges
        break_connections(pop, 1.0, np.random.default_rng(0))
        assert pop.social.n_edges == 0 and pop.physical.n_edges == phys

    def test_binomial_band(self):
        g = SocialNetwork(1001, [(0, k) for k in range(1, 1001)])
        pop = make_population(np.random.default_rng(0).random((1001, 2)), np.full(1001, 0.5), g.edges())
        removed = break_connections(pop, 0.1, np.random.default_rng(7))
        assert 60 <= removed <= 140


class TestDropAgents:
    def test_zero(self):
        pop = build_population(60, 0.1, 2, seed=0)
        edges = pop.social.edges()
        assert drop_agents(pop, 0.0, np.random.default_rng(0)).size == 0
        assert pop.social.edges() == edges

    def test_star_centre(self):
        pop = make_population(far_apart(5), [0.5] * 5, [(0, k) for k in range(1, 5)])
        pop.social.isolate(0)
        assert pop.social.n_edges == 0

    def test_one(self):
        pop = build_population(60, 0.1, 2, seed=0)
        s = pop.strategies.copy()
        drop_agents(pop, 1.0, np.random.default_rng(0))
        assert pop.social.n_edges == 0 and pop.n == 60
        assert np.array_equal(pop.strategies, s)


class TestMeasureResilience:
    def test_zero_magnitude_on_fixed_point(self):
        pop = build_population(100, 0.1, 2, seed=0)
        pop.strategies[:] = 0.8
        for kind in ShockKind:
            spec = ShockSpec(kind, attack_magnitude=0, acceptance_probability=0, perturbation_magnitude=0)
            res, post = measure_resilience(pop, spec, PARAMS, np.random.default_rng(0))
            assert res == 1.0

    @pytest.mark.parametrize("mag", [0.1, 0.5, 1.0])
    def test_uniform_cooperators_survive_drop_out(self, mag):
        pop = build_population(100, 0.1, 2, seed=1)
        pop.strategies[:] = 1.0
        res, _ = measure_resilience(pop, ShockSpec(ShockKind.AGENTS_DROP_OUT, perturbation_magnitude=mag), PARAMS, np.random.default_rng(2))
        assert res == 1.0

    def test_zero_magnitude_on_converged_state(self, converged):
        for kind in ShockKind:
            spec = ShockSpec(kind, attack_magnitude=0, acceptance_probability=0, perturbation_magnitude=0)
            res, post = measure_resilience(converged, spec, PARAMS, np.random.default_rng(1))
            assert res == 1.0 and np.array_equal(post.strategies, converged.strategies)

    def test_range_and_repeatability(self, converged):
        for kind in ShockKind:
            spec = ShockSpec(kind)
            a, pa = measure_resilience(converged, spec, PARAMS, np.random.default_rng(5))
            b, pb = measure_resilience(converged, spec, PARAMS, np.random.default_rng(5))
            assert 0 < a <= 1 and a == b
            assert np.array_equal(pa.strategies, pb.strategies)
            check_graph_invariants(pa.population)

    def test_input_untouched(self, converged):
        s = converged.strategies.copy()
        edges = converged.social.edges()
        measure_resilience(converged, ShockSpec(ShockKind.CONNECTION_BREAKS, perturbation_magnitude=0.5), PARAMS, np.random.default_rng(0))
        assert np.array_equal(converged.strategies, s) and converged.social.edges() == edges

    def test_r1_resilience_non_increasing_in_magnitude(self, converged):
        means = []
        for mag in (0.05, 0.3, 0.8):
            spec = ShockSpec(ShockKind.CONNECTION_BREAKS, perturbation_magnitude=mag)
            scores = [measure_resilience(converged, spec, PARAMS, np.random.default_rng(seed))[0] for seed in range(20)]
            means.append(np.mean(scores))
        assert means[0] >= means[1] >= means[2]


class TestApplyShock:
    def test_summary_and_invariants(self):
        pop = build_population(100, 0.1, 2, seed=2)
        rng = np.random.default_rng(0)
        assert apply_shock(pop, ShockSpec("AttackHubs", attack_magnitude=5), rng) == {"agents_forced": 5}
        assert "edges_added" in apply_shock(pop, ShockSpec("ConnectDefectors"), rng)
        assert "edges_removed" in apply_shock(pop, ShockSpec("ConnectionBreaks"), rng)
        assert "agents_dropped" in apply_shock(pop, ShockSpec("AgentsDropOut"), rng)
        check_graph_invariants(pop)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ShockSpec("AttackHubs", new_strategy=1.5)
        with pytest.raises(ValueError):
            ShockSpec("Meteor")
        assert ShockSpec("ConnectionBreaks").label == "R1"
