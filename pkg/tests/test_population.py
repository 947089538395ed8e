import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagnet.population import (
    PlacementParams,
    Profile,
    SocialNetwork,
    assign_initial_strategies,
    build_physical_network,
    build_population,
    euclidean_distance,
    generate_ba_network,
    hub_scores,
    load_population,
    place_agents_clustered,
    population_from_dict,
    population_to_dict,
    profile_counts,
    profile_of,
    rank_hubs,
    save_population,
)

from conftest import check_graph_invariants


def brute_force_edges(pos, radius):
    out = set()
    for i, j in itertools.combinations(range(len(pos)), 2):
        if math.dist(pos[i], pos[j]) <= radius:
            out.add((i, j))
    return out


class TestPlacement:
    def test_single_agent_tiny_sigma_sits_on_centre(self):
        rng = np.random.default_rng(3)
        centre = np.random.default_rng(3).random((1, 2))[0]
        pos = place_agents_clustered(1, PlacementParams(1, 1e-12), rng)
        np.testing.assert_allclose(pos[0], centre, atol=1e-9)

    def test_deterministic(self):
        p = PlacementParams(5, 0.05)
        a = place_agents_clustered(500, p, np.random.default_rng(11))
        b = place_agents_clustered(500, p, np.random.default_rng(11))
        assert np.array_equal(a, b)

    def test_clusters_are_tighter_than_cross_cluster(self):
        p = PlacementParams(5, 0.05)
        rng = np.random.default_rng(1)
        pos = place_agents_clustered(500, p, rng)
        # regenerate centres and labels with the same stream order
        r2 = np.random.default_rng(1)
        centres = r2.random((5, 2))
        labels = r2.integers(5, size=500)
        d_all = np.linalg.norm(pos[:, None, :] - centres[None, :, :], axis=2)
        within = d_all[np.arange(500), labels].mean()
        cross = d_all[labels[:, None] != np.arange(5)[None, :]].mean()
        assert within < cross

    def test_inside_unit_square(self):
        pos = place_agents_clustered(2000, PlacementParams(3, 0.4), np.random.default_rng(0))
        assert pos.min() >= 0 and pos.max() <= 1

    def test_uniform_layout(self):
        pos = place_agents_clustered(100, PlacementParams(layout="uniform"), np.random.default_rng(0))
        assert pos.shape == (100, 2)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            PlacementParams(0, 0.05)
        with pytest.raises(ValueError):
            PlacementParams(2, 0.0)


@pytest.mark.parametrize(
    "p,q,expected",
    [((0, 0), (0, 0), 0.0), ((0, 0), (3, 4), 5.0), ((0.1, 0.2), (0.4, 0.6), 0.5)],
)
def test_euclidean_distance(p, q, expected):
    assert euclidean_distance(p, q) == pytest.approx(expected, abs=1e-12)
    assert euclidean_distance(q, p) == euclidean_distance(p, q)


class TestPhysicalNetwork:
    def test_inclusion(self):
        net = build_physical_network(np.array([[0.0, 0.0], [0.3, 0.0]]), 0.5)
        assert net.n_edges == 1
        assert net.pair_dist[0] == pytest.approx(0.3)

    def test_exclusion(self):
        assert build_physical_network(np.array([[0.0, 0.0], [0.6, 0.0]]), 0.5).n_edges == 0

    def test_boundary_is_inclusive(self):
        assert build_physical_network(np.array([[0.0, 0.0], [0.5, 0.0]]), 0.5).n_edges == 1

    @pytest.mark.parametrize("n,radius,seed", [(100, 0.1, 0), (100, 0.3, 1), (1000, 0.05, 2)])
    def test_matches_brute_force(self, n, radius, seed):
        pos = np.random.default_rng(seed).random((n, 2))
        net = build_physical_network(pos, radius)
        got = set(zip(net.pairs_i.tolist(), net.pairs_j.tolist()))
        assert got == brute_force_edges(pos.tolist(), radius)
        for i, j, d in zip(net.pairs_i, net.pairs_j, net.pair_dist):
            assert d == pytest.approx(euclidean_distance(pos[i], pos[j]), abs=1e-15)

    def test_csr_symmetric_and_sorted(self):
        pos = np.random.default_rng(4).random((200, 2))
        net = build_physical_network(pos, 0.12)
        for i in range(200):
            nb = net.neighbors(i)
            assert np.all(np.diff(nb) > 0)
            for j in nb:
                assert i in net.neighbors(j)

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            build_physical_network(np.zeros((2, 2)), 0.0)


class TestBarabasiAlbert:
    def test_n3_m1_is_a_tree(self):
        g = generate_ba_network(3, 1, np.random.default_rng(0))
        assert g.n_edges == 2

    @pytest.mark.parametrize("n,m", [(500, 2), (200, 1), (300, 4), (10, 9)])
    def test_edge_count(self, n, m):
        g = generate_ba_network(n, m, np.random.default_rng(5))
        assert g.n_edges == m * (m + 1) // 2 + m * (n - m - 1)

    def test_heavy_tail(self):
        g = generate_ba_network(500, 2, np.random.default_rng(7))
        deg = g.degrees()
        assert g.n_edges == 997
        assert deg.max() > 5 * np.median(deg)

    def test_deterministic(self):
        a = generate_ba_network(300, 2, np.random.default_rng(9))
        b = generate_ba_network(300, 2, np.random.default_rng(9))
        assert a.edges() == b.edges()

    def test_connected_and_simple(self):
        g = generate_ba_network(400, 2, np.random.default_rng(1))
        seen, todo = {0}, [0]
        while todo:
            for j in g.neighbors(todo.pop()):
                if j not in seen:
                    seen.add(j)
                    todo.append(j)
        assert len(seen) == 400
        for i in range(400):
            assert i not in g.neighbors(i)

    @pytest.mark.parametrize("m", [0, 5, 6])
    def test_rejects_bad_m(self, m):
        with pytest.raises(ValueError):
            generate_ba_network(5, m, np.random.default_rng(0))


class TestStrategies:
    def test_profiles_evenly_filled(self):
        s = assign_initial_strategies(500, np.random.default_rng(2))
        counts = profile_counts(s)
        assert all(100 <= c <= 150 for c in counts.values())
        # chi-square against uniform buckets, 3 dof, 0.999 quantile
        obs = np.array(list(counts.values()))
        assert ((obs - 125) ** 2 / 125).sum() < 16.27

    def test_single(self):
        s = assign_initial_strategies(1, np.random.default_rng(0))
        assert s.shape == (1,) and 0 <= s[0] <= 1

    def test_deterministic(self):
        a = assign_initial_strategies(50, np.random.default_rng(8))
        assert np.array_equal(a, assign_initial_strategies(50, np.random.default_rng(8)))


@pytest.mark.parametrize(
    "s,profile",
    [
        (0.1, Profile.HIGHLY_DISTRUSTING),
        (0.0, Profile.HIGHLY_DISTRUSTING),
        (0.25, Profile.DISTRUSTING),
        (0.5, Profile.TRUSTING),
        (0.75, Profile.HIGHLY_TRUSTING),
        (1.0, Profile.HIGHLY_TRUSTING),
        (0.7499, Profile.TRUSTING),
    ],
)
def test_profile_of(s, profile):
    assert profile_of(s) is profile


@pytest.mark.parametrize("s", [-0.01, 1.01, float("nan")])
def test_profile_of_rejects_out_of_range(s):
    with pytest.raises(ValueError):
        profile_of(s)


class TestHubs:
    def test_star(self):
        g = SocialNetwork(5, [(0, k) for k in range(1, 5)])
        assert hub_scores(g).tolist() == [4, 1, 1, 1, 1]
        assert rank_hubs(g)[0] == 0

    def test_empty(self):
        assert hub_scores(SocialNetwork(4)).tolist() == [0, 0, 0, 0]
        assert rank_hubs(SocialNetwork(4)).tolist() == [0, 1, 2, 3]

    def test_ties_by_id(self):
        g = SocialNetwork(4, [(2, 3), (0, 1)])
        assert rank_hubs(g).tolist() == [0, 1, 2, 3]

    def test_top30_stable(self):
        g = generate_ba_network(500, 2, np.random.default_rng(3))
        assert np.array_equal(rank_hubs(g)[:30], rank_hubs(g)[:30])
        deg = hub_scores(g)
        top = rank_hubs(g)[:30]
        assert deg[top].min() >= np.sort(deg)[-30]


class TestSocialNetwork:
    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            SocialNetwork(3).add_edge(1, 1)

    def test_duplicate_ignored(self):
        g = SocialNetwork(3)
        assert g.add_edge(0, 1) and not g.add_edge(1, 0)
        assert g.n_edges == 1

    def test_isolate(self):
        g = SocialNetwork(5, [(0, k) for k in range(1, 5)] + [(1, 2)])
        assert g.isolate(0) == 4
        assert g.edges() == [(1, 2)]


class TestPopulation:
    def test_determinism(self):
        a = build_population(300, 0.1, 2, PlacementParams(), seed=5)
        b = build_population(300, 0.1, 2, PlacementParams(), seed=5)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.strategies, b.strategies)
        assert a.social.edges() == b.social.edges()
        check_graph_invariants(a)

    def test_merged_csr_counts_shared_peers_twice(self):
        from conftest import make_population

        pop = make_population([[0, 0], [0.05, 0]], [0.2, 0.8], [(0, 1)], radius=0.1)
        indptr, indices = pop.merged_csr()
        assert indices[indptr[0] : indptr[1]].tolist() == [1, 1]

    def test_merged_csr_refreshes_after_mutation(self):
        from conftest import make_population

        pop = make_population([[0, 0], [5, 0], [9, 0]], [0.2, 0.8, 0.5])
        assert pop.merged_csr()[1].size == 0
        pop.social.add_edge(0, 2)
        assert pop.merged_csr()[1].tolist() == [2, 0]


class TestPersistence:
    def test_round_trip(self, tmp_path):
        pop = build_population(120, 0.1, 2, PlacementParams(), seed=3)
        path = tmp_path / "state.json"
        save_population(pop, path)
        back = load_population(path)
        assert np.array_equal(back.positions, pop.positions)
        assert np.array_equal(back.strategies, pop.strategies)
        assert back.social == pop.social
        assert np.array_equal(back.physical.pairs_i, pop.physical.pairs_i)
        assert back.seed == 3

    def test_schema_rejects_unknown_key(self):
        doc = population_to_dict(build_population(10, 0.3, 1, seed=0))
        doc["extra"] = 1
        with pytest.raises(ValueError):
            population_from_dict(doc)

    def test_rejects_inconsistent_physical_edges(self):
        doc = population_to_dict(build_population(30, 0.3, 1, seed=0))
        doc["physical_edges"] = doc["physical_edges"][1:]
        with pytest.raises(ValueError):
            population_from_dict(doc)

    def test_document_is_plain_json(self):
        doc = population_to_dict(build_population(10, 0.3, 1, seed=0))
        assert json.loads(json.dumps(doc)) == doc
        assert doc["schema_version"] == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120), st.floats(0.01, 0.6), st.integers(0, 2**32 - 1))
def test_radius_graph_property(n, radius, seed):
    pos = np.random.default_rng(seed).random((n, 2))
    net = build_physical_network(pos, radius)
    assert set(zip(net.pairs_i.tolist(), net.pairs_j.tolist())) == brute_force_edges(pos.tolist(), radius)
