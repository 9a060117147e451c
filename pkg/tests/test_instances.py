import itertools
import json
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from fraccolor.errors import BudgetExhausted, InstanceError, NotColorable
from fraccolor.instances import (
    LocalColoring, build_graph, build_hypergraph, check_linear, check_triangle_free,
    degeneracy_ordering, find_local_coloring, format_instance, is_triangle, local_coloring_from_json,
    local_coloring_to_json, parse_instance, read_instance, write_instance,
)


def complete(n):
    return build_graph(n, itertools.combinations(range(n), 2))


def cycle(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


FANO = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]


# construction ----------------------------------------------------------------

def test_build_graph_examples():
    g = build_graph(2, [(0, 1)])
    assert g.adjacency == ((1,), (0,))
    with pytest.raises(InstanceError, match="self-loop"):
        build_graph(2, [(0, 0)])
    with pytest.warns(UserWarning, match="duplicate"):
        g = build_graph(3, [(0, 1), (1, 0)])
    assert g.m == 1
    with pytest.raises(InstanceError):
        build_graph(2, [(0, 2)])


def test_build_hypergraph_examples():
    h = build_hypergraph(3, 3, [{0, 1, 2}])
    assert h.edges == ((0, 1, 2),)
    with pytest.raises(InstanceError, match="repeats"):
        build_hypergraph(4, 3, [[0, 1, 1]])
    with pytest.raises(InstanceError):
        build_hypergraph(4, 3, [[0, 1]])
    with pytest.raises(InstanceError):
        build_hypergraph(4, 3, [[0, 1, 4]])
    with pytest.raises(InstanceError):
        build_hypergraph(4, 1, [])
    h = build_hypergraph(5, 3, [{0, 1, 2}, {2, 3, 4}])
    assert h.degrees()[2] == 2


# degeneracy ------------------------------------------------------------------

def brute_degeneracy(n, edges):
    best = 0
    for k in range(1, n + 1):
        for sub in itertools.combinations(range(n), k):
            s = set(sub)
            deg = {v: 0 for v in sub}
            for e in edges:
                if set(e) <= s:
                    for v in e:
                        deg[v] += 1
            best = max(best, min(deg.values()))
    return best


def test_degeneracy_examples():
    assert degeneracy_ordering(complete(4)).d == 3
    assert degeneracy_ordering(cycle(5)).d == 2
    assert degeneracy_ordering(build_hypergraph(3, 3, [(0, 1, 2)])).d == 1


graphs_small = st.integers(1, 8).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=20)))


@settings(max_examples=150, deadline=None)
@given(graphs_small)
def test_degeneracy_matches_brute_force(data):
    n, raw = data
    edges = {tuple(sorted(e)) for e in raw if e[0] != e[1]}
    g = build_graph(n, edges)
    o = degeneracy_ordering(g)
    assert o.d == brute_degeneracy(n, g.edges)
    assert all(o.position[o.order[i]] == i for i in range(n))
    assert all(o.left_degree(v) <= o.d for v in range(n))
    assert n == 0 or max(o.left_degree(v) for v in range(n)) == o.d
    for v in range(n):
        assert len(o.left_neighbors(v)) <= o.d


hyper_small = st.tuples(st.integers(3, 7), st.integers(2, 3)).flatmap(
    lambda nr: st.tuples(st.just(nr[0]), st.just(nr[1]),
                         st.lists(st.sets(st.integers(0, nr[0] - 1), min_size=nr[1], max_size=nr[1]),
                                  max_size=8)))


@settings(max_examples=100, deadline=None)
@given(hyper_small)
def test_hyper_degeneracy_matches_brute_force(data):
    n, r, raw = data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        h = build_hypergraph(n, r, raw)
    o = degeneracy_ordering(h)
    assert o.d == brute_degeneracy(n, h.edges)
    for v in range(n):
        assert len(o.left_neighbors(v)) <= (r - 1) * o.d


def test_ordering_is_deterministic():
    g = cycle(7)
    assert degeneracy_ordering(g) == degeneracy_ordering(g)


def test_with_d_only_raises():
    o = degeneracy_ordering(cycle(5))
    assert o.with_d(4).d == 4
    with pytest.raises(ValueError):
        o.with_d(1)


# linearity and triangles -----------------------------------------------------

def naive_linear(edges):
    return all(len(set(e) & set(f)) <= 1 for e, f in itertools.combinations(edges, 2))


def naive_triangle(edges):
    for e, f, g in itertools.permutations([set(x) for x in edges], 3):
        core = e & f & g
        for u in e & f:
            for v in f & g:
                for w in e & g:
                    if not {u, v, w} & core:
                        return True
    return False


def test_linear_examples():
    h = build_hypergraph(4, 3, [(0, 1, 2), (0, 1, 3)])
    rep = check_linear(h)
    assert not rep and rep.witness == (0, 1)
    assert check_linear(build_hypergraph(5, 3, [(0, 1, 2), (2, 3, 4)]))
    assert check_linear(build_hypergraph(7, 3, FANO))
    assert naive_linear(FANO)


def test_triangle_examples():
    h = build_hypergraph(7, 3, [(1, 2, 3), (3, 4, 5), (5, 6, 1)])
    assert not check_triangle_free(h)
    assert not check_triangle_free(h, assume_linear=False)
    sun = build_hypergraph(7, 3, [(0, 1, 2), (0, 3, 4), (0, 5, 6)])
    assert check_triangle_free(sun)
    assert check_triangle_free(sun, assume_linear=False)
    assert check_triangle_free(build_hypergraph(3, 3, [(0, 1, 2)]))
    assert not check_triangle_free(build_hypergraph(7, 3, FANO))
    assert is_triangle({1, 2, 3}, {3, 4, 5}, {5, 6, 1})


hyper_m12 = st.tuples(st.integers(3, 8), st.integers(2, 4)).flatmap(
    lambda nr: st.tuples(st.just(nr[0]), st.just(min(nr[1], nr[0])),
                         st.lists(st.sets(st.integers(0, nr[0] - 1), min_size=min(nr[1], nr[0]),
                                          max_size=min(nr[1], nr[0])), max_size=12)))


@settings(max_examples=300, deadline=None)
@given(hyper_m12)
def test_validators_match_naive_enumeration(data):
    n, r, raw = data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        h = build_hypergraph(n, r, raw)
    lin = naive_linear(h.edges)
    assert bool(check_linear(h)) == lin
    tri = naive_triangle(h.edges)
    assert bool(check_triangle_free(h, assume_linear=False)) == (not tri)
    if lin:
        assert bool(check_triangle_free(h)) == (not tri)


# local colorings -------------------------------------------------------------

def test_local_coloring_examples():
    c5 = cycle(5)
    loc = find_local_coloring(c5, 1)
    assert loc.is_proper(c5)
    with pytest.raises(NotColorable) as info:
        find_local_coloring(complete(3), 1)
    assert info.value.exhausted
    loc = find_local_coloring(complete(3), 2)
    assert loc.is_proper(complete(3))


def test_local_coloring_budget_reported_distinctly():
    with pytest.raises(BudgetExhausted) as info:
        find_local_coloring(complete(9), 7, budget=5)
    assert not info.value.exhausted


@settings(max_examples=60, deadline=None)
@given(graphs_small, st.integers(1, 4))
def test_found_local_coloring_is_proper_on_every_neighborhood(data, r):
    n, raw = data
    g = build_graph(n, {tuple(sorted(e)) for e in raw if e[0] != e[1]})
    try:
        loc = find_local_coloring(g, r)
    except NotColorable:
        return
    for v in range(n):
        cls = dict(zip(g.adjacency[v], loc.classes[v]))
        for u, w in itertools.combinations(g.adjacency[v], 2):
            if g.has_edge(u, w):
                assert cls[u] != cls[w]
        assert all(0 <= c < r for c in cls.values())


def test_improper_local_coloring_detected():
    g = complete(3)
    bad = LocalColoring(2, ((0, 0), (0, 0), (0, 0)))
    assert not bad.is_proper(g)
    assert bad.violations(g)


# file formats ----------------------------------------------------------------

def test_instance_round_trip(tmp_path):
    g = cycle(6)
    h = build_hypergraph(5, 3, [(0, 1, 2), (2, 3, 4)])
    for inst in (g, h):
        path = tmp_path / "inst.txt"
        write_instance(inst, path)
        assert read_instance(path) == inst
    text = "# comment\ngraph 3 2\n0 1  # trailing\n\n1 2\n"
    assert parse_instance(text) == build_graph(3, [(0, 1), (1, 2)])
    assert format_instance(h).startswith("hypergraph 5 2 3\n")


@pytest.mark.parametrize("text", ["", "graph 3 2\n0 1\n", "blob 1 1\n", "hypergraph 4 1 3\n0 1\n", "graph x 1\n0 1\n"])
def test_malformed_files_rejected(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_local_coloring_json_round_trip():
    g = complete(3)
    loc = find_local_coloring(g, 2)
    obj = json.loads(json.dumps(local_coloring_to_json(loc, g)))
    assert local_coloring_from_json(obj, g) == loc
