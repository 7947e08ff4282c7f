import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfoverlay.generators import GeneratorConfig, Model, generate_pa
from sfoverlay.graph import Graph, GraphError, bfs_distances
from sfoverlay.search import (
    CURVE_HEADER,
    Algorithm,
    SearchConfig,
    SearchOutcome,
    flood_search,
    measure_search_curve,
    normalized_flood_search,
    normalized_rw_budget,
    random_walk_search,
    run_search,
)


def ring(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(n):
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def complete(n):
    return Graph.from_edges(n, list(itertools.combinations(range(n), 2)))


def fl(g, src, ttl, target=None):
    return flood_search(g, SearchConfig(Algorithm.FL, ttl, source=src, target=target))


def nf(g, src, ttl, k_min, seed=0, target=None):
    return normalized_flood_search(g, SearchConfig(Algorithm.NF, ttl, source=src, k_min=k_min, rng_seed=seed, target=target))


def rw(g, src, ttl, seed=0, target=None):
    return random_walk_search(g, SearchConfig(Algorithm.RW, ttl, source=src, rng_seed=seed, target=target))


random_graphs = st.integers(2, 60).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=1, max_size=3 * n),
    )
)


def build(data):
    n, edges = data
    return Graph.from_edges(n, [e for e in edges if e[0] != e[1]])


def flood_messages_oracle(g, src, ttl):
    """Closed form: every node first reached at hop h < ttl sends deg-1 copies; the source sends deg."""
    d = bfs_distances(g, src).tolist()
    total = 0
    for v, dv in enumerate(d):
        if dv is not None and dv < ttl:
            total += g.degree(v) - (0 if v == src else 1)
    return total


class TestFlood:
    def test_star_center(self):
        out = fl(star(9), 0, 1)
        assert (out.hits, out.messages) == (8, 8)

    def test_path(self):
        out = fl(path_graph(5), 0, 2)
        assert (out.hits, out.messages) == (2, 2)

    def test_triangle(self):
        g = complete(3)
        out = fl(g, 0, 2)
        assert (out.hits, out.messages) == (2, 4)

    def test_complete_sweep(self):
        g = ring(11)
        assert fl(g, 3, 5).hits == 10
        assert fl(g, 3, 50).hits == 10

    def test_ttl_zero(self):
        out = fl(ring(5), 0, 0)
        assert (out.hits, out.messages) == (0, 0)

    def test_delivery(self):
        g = path_graph(6)
        assert fl(g, 0, 5, target=4).delivery_hops == 4
        assert fl(g, 0, 3, target=4).delivery_hops is None
        assert fl(g, 0, 3, target=0).delivery_hops == 0

    @settings(max_examples=200, deadline=None)
    @given(random_graphs, st.integers(0, 8), st.data())
    def test_matches_bfs_ball_and_message_oracle(self, data, ttl, pick):
        g = build(data)
        src = pick.draw(st.integers(0, g.node_count - 1))
        d = bfs_distances(g, src).tolist()
        out = fl(g, src, ttl)
        assert out.hits == sum(1 for x in d if x is not None and 0 < x <= ttl)
        assert out.messages == flood_messages_oracle(g, src, ttl)
        assert out.messages >= out.hits


class TestNormalizedFlood:
    def test_requires_kmin(self):
        with pytest.raises(ValueError):
            SearchConfig(Algorithm.NF, 3)
        with pytest.raises(ValueError):
            SearchConfig(Algorithm.NF, 3, k_min=0)

    def test_star_kmin1(self):
        for seed in range(10):
            out = nf(star(9), 0, 1, 1, seed=seed)
            assert (out.hits, out.messages) == (1, 1)

    @pytest.mark.parametrize("ttl", range(0, 7))
    def test_ring_equals_flood(self, ttl):
        g = ring(8)
        a, b = nf(g, 2, ttl, 2, seed=ttl), fl(g, 2, ttl)
        assert (a.hits, a.messages) == (b.hits, b.messages)

    def test_ring_messages(self):
        g = ring(8)
        assert nf(g, 0, 2, 2).messages == 4
        assert nf(g, 0, 3, 2).messages == 6

    def test_relay_reaches_destination_at_hop_3(self):
        # s=0 with neighbours a=1, b=2, x=3; a-c, b-c, x-e; c=4 leads to d=5; e=6
        g = Graph.from_edges(7, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 6), (4, 5)])
        hops = {nf(g, 0, 3, 2, seed=s, target=5).delivery_hops for s in range(200)}
        assert hops == {3}
        assert all(nf(g, 0, 2, 2, seed=s, target=5).delivery_hops is None for s in range(50))

    def test_source_fanout_distribution(self):
        # source of degree 4, k_min=2: two distinct leaves, each reached with probability 1/2
        g = star(5)
        runs = 2000
        reached = np.zeros(5)
        for s in range(runs):
            for leaf in range(1, 5):
                reached[leaf] += nf(g, 0, 1, 2, seed=s, target=leaf).delivery_hops == 1
        assert np.all(reached[1:].sum() == 2 * runs)
        assert np.all(np.abs(reached[1:] / runs - 0.5) < 4 * np.sqrt(0.25 / runs))

    @settings(max_examples=150, deadline=None)
    @given(random_graphs, st.integers(0, 6), st.integers(1, 3), st.integers(0, 2**31), st.data())
    def test_bounded_by_flood(self, data, ttl, k_min, seed, pick):
        g = build(data)
        src = pick.draw(st.integers(0, g.node_count - 1))
        a, b = nf(g, src, ttl, k_min, seed=seed), fl(g, src, ttl)
        assert a.hits <= b.hits
        assert a.messages <= b.messages
        assert a.messages >= a.hits
        if g.degrees.max() <= k_min:
            assert (a.hits, a.messages) == (b.hits, b.messages)

    def test_deterministic(self):
        g = generate_pa(GeneratorConfig(Model.PA, 2000, 2), 1)
        assert nf(g, 5, 6, 2, seed=9) == nf(g, 5, 6, 2, seed=9)


class TestRandomWalk:
    def test_one_step(self):
        g = generate_pa(GeneratorConfig(Model.PA, 200, 2), 3)
        for s in range(20):
            out = rw(g, s, 1, seed=s)
            assert (out.hits, out.messages) == (1, 1)

    def test_path_forced(self):
        for seed in range(10):
            out = rw(path_graph(4), 0, 3, seed=seed)
            assert (out.hits, out.messages) == (3, 3)

    def test_dead_end_backtracks(self):
        out = rw(path_graph(3), 0, 4, seed=0)  # 0 -> 1 -> 2 -> 1 -> 0
        assert (out.hits, out.messages) == (2, 4)

    def test_isolated_source(self):
        with pytest.raises(GraphError):
            rw(Graph(3), 0, 2)

    def test_target_stops_early(self):
        out = rw(path_graph(6), 0, 10, target=3)
        assert out.delivery_hops == 3
        assert out.messages == 3

    def test_k4_trajectory_law(self):
        # enumerate all non-backtracking walks of length 3 from node 0 on K4
        nbrs = {v: [u for u in range(4) if u != v] for v in range(4)}
        law = Counter()
        for a in nbrs[0]:
            for b in [x for x in nbrs[a] if x != 0]:
                for c in [x for x in nbrs[b] if x != a]:
                    law[len({a, b, c} - {0})] += 1
        total = sum(law.values())
        assert total == 3 * 2 * 2
        g = complete(4)
        runs = 30_000
        seen = Counter(rw(g, 0, 3, seed=s).hits for s in range(runs))
        assert set(seen) <= {2, 3}
        for h, ways in law.items():
            p = ways / total
            assert abs(seen[h] / runs - p) < 4 * np.sqrt(p * (1 - p) / runs)

    @settings(max_examples=150, deadline=None)
    @given(random_graphs, st.integers(1, 30), st.integers(0, 2**31), st.data())
    def test_hits_messages_ttl(self, data, ttl, seed, pick):
        g = build(data)
        candidates = [v for v in range(g.node_count) if g.degree(v) > 0]
        if not candidates:
            return
        src = pick.draw(st.sampled_from(candidates))
        out = rw(g, src, ttl, seed=seed)
        assert out.hits <= out.messages <= ttl
        assert out.messages == ttl
        reachable = sum(1 for x in bfs_distances(g, src).tolist() if x)
        assert out.hits <= reachable


class TestBudget:
    def test_pass_through(self):
        assert normalized_rw_budget(SearchOutcome(hits=30, messages=57, ttl_used=4, source=0)) == 57
        assert normalized_rw_budget(SearchOutcome(hits=0, messages=0, ttl_used=4, source=0)) == 0

    def test_ring(self):
        assert normalized_rw_budget(nf(ring(8), 3, 2, 2)) == 4

    def test_dispatch(self):
        g = ring(6)
        assert run_search(g, SearchConfig(Algorithm.FL, 2)).hits == 4
        assert run_search(g, SearchConfig(Algorithm.NF, 2, k_min=2)).hits == 4
        assert run_search(g, SearchConfig("RW", 2, rng_seed=1)).hits == 2


@pytest.fixture(scope="module")
def pa_graph():
    return generate_pa(GeneratorConfig(Model.PA, 3000, 2, hard_cutoff=20), 5)


class TestCurves:
    def test_flood_beyond_diameter(self):
        g = ring(15)
        cur = measure_search_curve(g, "FL", [7, 8, 20], 10, rng_seed=1)
        assert np.all(cur.mean_hits == 14)
        assert np.all(cur.stderr_hits == 0)

    @pytest.mark.parametrize("alg", ["FL", "NF", "RW"])
    def test_monotone_and_deterministic(self, pa_graph, alg):
        a = measure_search_curve(pa_graph, alg, range(1, 9), 40, k_min=2, rng_seed=3)
        b = measure_search_curve(pa_graph, alg, range(1, 9), 40, k_min=2, rng_seed=3)
        assert np.array_equal(a.hits, b.hits) and np.array_equal(a.messages, b.messages)
        assert np.all(np.diff(a.hits, axis=0) >= 0)
        assert np.all(np.diff(a.mean_hits) >= 0)
        assert np.all(a.hits <= a.messages)

    def test_prefix_matches_single_run(self, pa_graph):
        cur = measure_search_curve(pa_graph, "FL", range(0, 6), 5, rng_seed=2)
        for j, s in enumerate(cur.sources.tolist()):
            for i, t in enumerate(cur.ttls.tolist()):
                out = fl(pa_graph, s, t)
                assert (cur.hits[i, j], cur.messages[i, j]) == (out.hits, out.messages)

    def test_fair_rw_budget(self, pa_graph):
        sources = np.arange(0, 3000, 100)
        fair = measure_search_curve(pa_graph, "RW", range(1, 6), len(sources), k_min=2, rng_seed=4, sources=sources)
        raw = measure_search_curve(pa_graph, "RW", range(1, 6), len(sources), rng_seed=4, fair=False, sources=sources)
        assert np.all(raw.messages == np.arange(1, 6)[:, None])
        # fair budgets are the same source's NF message counts, which grow like k_min^tau
        assert np.all(fair.messages >= raw.messages)
        assert np.all(fair.hits <= fair.messages)

    def test_rw_fair_needs_kmin(self, pa_graph):
        with pytest.raises(ValueError):
            measure_search_curve(pa_graph, "RW", [1, 2], 5, rng_seed=0)

    def test_isolated_source_in_rw_curve(self):
        g = Graph.from_edges(4, [(0, 1), (1, 2)])
        cur = measure_search_curve(g, "RW", [1, 2], 1, k_min=1, rng_seed=0, sources=[3])
        assert cur.hits.sum() == 0 and cur.messages.sum() == 0

    def test_csv(self, tmp_path):
        cur = measure_search_curve(ring(10), "FL", [1, 2, 3], 4, rng_seed=0)
        text = cur.to_csv(tmp_path / "c.csv")
        lines = text.splitlines()
        assert lines[0] == CURVE_HEADER == "tau,mean_hits,stderr_hits,mean_messages,stderr_messages"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["1", "2", "3"]
        assert float(lines[2].split(",")[1]) == 4.0
        assert (tmp_path / "c.csv").read_text() == text

    def test_bad_args(self, pa_graph):
        with pytest.raises(ValueError):
            measure_search_curve(pa_graph, "FL", [], 3)
        with pytest.raises(ValueError):
            measure_search_curve(pa_graph, "FL", [1], 0)
        with pytest.raises(ValueError):
            measure_search_curve(pa_graph, "NF", [1], 3)
