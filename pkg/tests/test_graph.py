import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coexnet.errors import NotChordal
from coexnet.graph import (
    UndirectedGraph,
    clique_graph,
    connected_components,
    find_cliques,
    is_chordal,
    mcs_order,
    perfect_sequence,
    separates,
)
from oracles import (
    FIG1_CLIQUES,
    FIG1_SEPARATORS,
    has_chordless_cycle,
    random_chordal_graph,
    random_graph,
    zero_based,
)


def brute_cliques(g):
    p = g.vertex_count
    complete = [
        frozenset(s)
        for k in range(1, p + 1)
        for s in itertools.combinations(range(p), k)
        if g.is_complete(s)
    ]
    return {c for c in complete if not any(c < d for d in complete)}


def assert_perfect(g, ps):
    seen = set()
    for j, (c, s) in enumerate(zip(ps.cliques, ps.separators)):
        assert g.is_complete(c)
        assert s == c & seen
        if j > 0 and s:
            assert any(s <= d for d in ps.cliques[:j])
            assert s <= ps.cliques[ps.parents[j]]
        seen |= c


class TestContainer:
    def test_add_edge_and_counts(self):
        g = UndirectedGraph(4)
        assert g.add_edge(0, 1)
        assert not g.add_edge(1, 0)
        assert g.edge_count == 1 and g.has_edge(1, 0)
        assert g.degree(0) == 1
        assert g.edges() == [(0, 1)]
        assert len(g.non_edges()) == 5

    def test_rejects_self_loops_and_bad_vertices(self):
        g = UndirectedGraph(3)
        with pytest.raises(ValueError):
            g.add_edge(1, 1)
        with pytest.raises((ValueError, IndexError)):
            g.add_edge(0, 3)

    def test_copy_is_independent(self):
        g = UndirectedGraph(3, [(0, 1)])
        h = g.copy()
        h.add_edge(1, 2)
        assert g.edge_count == 1 and h.edge_count == 2
        assert g != h

    def test_complete(self):
        g = UndirectedGraph.complete(5)
        assert g.edge_count == 10 and g.is_complete(range(5))


class TestFigureOne:
    def test_cliques(self, fig1):
        assert set(find_cliques(fig1)) == set(zero_based(FIG1_CLIQUES))

    def test_separators_default_order(self, fig1):
        ps = perfect_sequence(fig1)
        assert Counter(s for s in ps.separators[1:]) == Counter(zero_based(FIG1_SEPARATORS))
        assert_perfect(fig1, ps)

    @pytest.mark.parametrize("seed", range(25))
    def test_separators_any_perfect_sequence(self, fig1, seed):
        prio = np.random.default_rng(seed).permutation(11).tolist()
        ps = perfect_sequence(fig1, prio)
        assert set(ps.cliques) == set(zero_based(FIG1_CLIQUES))
        assert Counter(ps.multiplicities) == Counter(zero_based(FIG1_SEPARATORS))
        assert_perfect(fig1, ps)

    def test_chordal(self, fig1):
        assert is_chordal(fig1)
        assert not has_chordless_cycle(fig1)


def test_chordless_square_rejected():
    g = UndirectedGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert not is_chordal(g)
    with pytest.raises(NotChordal):
        perfect_sequence(g)
    assert set(find_cliques(g)) == {frozenset(e) for e in g.edges()}


def test_mcs_matches_chordless_cycle_search():
    # every graph on 5 vertices, plus random graphs up to 10 vertices
    pairs = list(itertools.combinations(range(5), 2))
    graphs = [UndirectedGraph(5, [pairs[k] for k in range(10) if m >> k & 1]) for m in range(1 << 10)]
    rng = np.random.default_rng(7)
    graphs += [random_graph(int(rng.integers(4, 11)), rng.uniform(0.15, 0.7), rng) for _ in range(1000)]
    bad = [g for g in graphs if mcs_order(g)[1] == has_chordless_cycle(g)]
    assert not bad


def test_clique_lists_against_enumeration():
    rng = np.random.default_rng(8)
    for _ in range(300):
        g = random_graph(int(rng.integers(1, 9)), rng.uniform(0.1, 0.8), rng)
        assert set(find_cliques(g)) == brute_cliques(g)


def test_separator_multiset_invariant_to_order():
    rng = np.random.default_rng(9)
    for _ in range(150):
        p = int(rng.integers(2, 12))
        g = random_chordal_graph(p, rng)
        ref = Counter(perfect_sequence(g).multiplicities)
        for _ in range(5):
            ps = perfect_sequence(g, rng.permutation(p).tolist())
            assert Counter(ps.multiplicities) == ref
            assert set(ps.cliques) == brute_cliques(g)
            assert_perfect(g, ps)


def test_junction_identity():
    # one more clique than separators per connected component
    rng = np.random.default_rng(10)
    for _ in range(100):
        g = random_chordal_graph(int(rng.integers(1, 13)), rng)
        ps = perfect_sequence(g)
        comps = connected_components(g)
        assert len(ps.cliques) - sum(ps.multiplicities.values()) == len(comps)
        # clique sizes minus weighted separator sizes recovers p
        size = sum(len(c) for c in ps.cliques) - sum(nu * len(s) for s, nu in ps.multiplicities.items())
        assert size == g.vertex_count


def test_empty_and_isolated():
    g = UndirectedGraph(3)
    ps = perfect_sequence(g)
    assert sorted(map(sorted, ps.cliques)) == [[0], [1], [2]]
    assert ps.multiplicities == {}
    assert perfect_sequence(UndirectedGraph(0)).cliques == ()


def test_connected_components_order():
    g = UndirectedGraph(6, [(4, 1), (2, 5)])
    assert connected_components(g) == [frozenset({0}), frozenset({1, 4}), frozenset({2, 5}), frozenset({3})]


def test_separates():
    path = UndirectedGraph(4, [(0, 1), (1, 2), (2, 3)])
    assert separates(path, {0}, {3}, {1})
    assert separates(path, {0}, {3}, {2})
    assert not separates(path, {0}, {3}, set())
    assert separates(UndirectedGraph(2), {0}, {1}, set())


def test_clique_graph_figure_one(fig1):
    ps = perfect_sequence(fig1)
    cg = clique_graph(fig1, ps)
    named = {frozenset({ps.cliques[i], ps.cliques[j]}) for i, j in cg.edges}
    c = dict(zip("123456", zero_based(FIG1_CLIQUES)))
    # {8,9,10}, {4,9,10}, {8,9,11} hang together through different 2-sets
    assert frozenset({c["2"], c["3"]}) in named
    assert frozenset({c["3"], c["4"]}) in named
    assert frozenset({c["3"], c["5"]}) in named
    assert frozenset({c["1"], c["6"]}) in named
    assert frozenset({c["2"], c["6"]}) in named
    assert frozenset({c["1"], c["3"]}) not in named


def test_clique_graph_links_components():
    g = UndirectedGraph(4, [(0, 1), (2, 3)])
    cg = clique_graph(g, perfect_sequence(g))
    assert cg.edges == frozenset({(0, 1)})


@st.composite
def graphs(draw, max_p=9):
    p = draw(st.integers(1, max_p))
    pairs = list(itertools.combinations(range(p), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return UndirectedGraph(p, chosen)


@settings(max_examples=150, deadline=None)
@given(graphs(), st.randoms(use_true_random=False))
def test_relabel_invariance(g, rnd):
    perm = list(range(g.vertex_count))
    rnd.shuffle(perm)
    h = g.relabel(perm)
    assert is_chordal(g) == is_chordal(h)
    mapped = {frozenset(perm[v] for v in c) for c in find_cliques(g)}
    assert mapped == set(find_cliques(h))
    if is_chordal(g):
        a = {frozenset(perm[v] for v in s): k for s, k in perfect_sequence(g).multiplicities.items()}
        assert a == perfect_sequence(h).multiplicities


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_mcs_visits_every_vertex_once(g):
    order, _ = mcs_order(g)
    assert sorted(order) == list(range(g.vertex_count))
