"""Graph procedure: backends, determinism, invariants and agreement with the exact oracle."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraccolor import rules
from fraccolor.analysis import exact_oracle, initial_identities
from fraccolor.errors import DomainError, InstanceError, StructureError
from fraccolor.generators import GenSpec, gen_locally_r_colorable
from fraccolor.graph_engine import GraphParams, run_graph_coloring, simulate_graph
from fraccolor.instances import build_graph, build_hypergraph, degeneracy_ordering, find_local_coloring
from fraccolor.rng import ACT

from _catalog import P0S, distribution_mismatches, graph_catalog


def _instance(n, d, r, seed):
    g, loc = gen_locally_r_colorable(GenSpec(n, d, r=r, seed=seed))
    return g, degeneracy_ordering(g), loc


@pytest.fixture(scope="module")
def inst_r2():
    return _instance(120, 4, 2, 7)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**40), st.integers(1, 3), st.sampled_from([0, rules.MUT_NO_MU, rules.MUT_NO_KILL]))
def test_backends_bit_identical(seed, r, mut):
    g, o, loc = _instance(60, 3, r, seed % 1000)
    P = GraphParams(150, 1.0, r, max(2, o.d), seed=seed)
    watch = list(range(0, g.n, 7))
    a = simulate_graph(g, o, loc, P, watch=watch, check=True, mutation=mut, backend="numba")
    b = simulate_graph(g, o, loc, P, watch=watch, check=True, mutation=mut, backend="numpy")
    assert np.array_equal(a.state.p, b.state.p)
    assert np.array_equal(a.state.bad, b.state.bad)
    assert np.array_equal(a.state.selected, b.state.selected)
    assert a.counters == b.counters
    assert a.sets.sets == b.sets.sets
    np.testing.assert_allclose(a.trace.P, b.trace.P, rtol=1e-12)
    np.testing.assert_allclose(a.trace.Q, b.trace.Q, rtol=1e-12)


def test_determinism(inst_r2):
    g, o, loc = inst_r2
    P = GraphParams(500, 1.0, 2, o.d, seed=11)
    s1, t1 = run_graph_coloring(g, o, loc, P, watch=[0, 5])
    s2, t2 = run_graph_coloring(g, o, loc, P, watch=[0, 5])
    assert s1.dumps() == s2.dumps() and t1.to_csv() == t2.to_csv()
    s3, _ = run_graph_coloring(g, o, loc, P.with_seed(12))
    assert s3.sets != s1.sets


def test_validity_and_check_counters(inst_r2):
    g, o, loc = inst_r2
    for seed in range(4):
        run = simulate_graph(g, o, loc, GraphParams(800, 0.5, 2, o.d, seed=seed), check=True)
        assert run.sets.is_valid(g)
        for name in ("range_violations", "class_violations", "pin_violations", "prob_violations"):
            assert run.counters[name] == 0, name
        assert run.counters["activations"] > 0


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_check_counters_with_coins(backend):
    # a large start weight with r = 3 reaches the coin case often
    g, o, loc = _instance(150, 6, 3, 5)
    run = simulate_graph(g, o, loc, GraphParams(500, 1.0, 3, o.d, seed=1, alpha=0.1), check=True, backend=backend)
    assert run.counters["coins"] > 0 and run.counters["case_c"] > 0
    for name in ("range_violations", "class_violations", "pin_violations", "prob_violations"):
        assert run.counters[name] == 0, name
    assert run.sets.is_valid(g)


def test_no_kill_mutation_breaks_validity(inst_r2):
    g, o, loc = inst_r2
    run = simulate_graph(g, o, loc, GraphParams(800, 0.5, 2, o.d, seed=1), mutation=rules.MUT_NO_KILL)
    assert not run.sets.is_valid(g)


def test_isolated_vertex_binomial():
    g = build_graph(1, [])
    o = degeneracy_ordering(g)
    loc = find_local_coloring(g, 1)
    sizes = np.array([len(run_graph_coloring(g, o, loc, GraphParams(1000, 1.0, 1, 2, seed=s, alpha=0.2))[0].sets[0])
                      for s in range(400)])
    # Binomial(1000, 0.1): mean 100, variance 90
    assert abs(sizes.mean() - 100) < 5 * (90 / 400) ** 0.5
    assert 60 < sizes.var() < 130


def test_weight_range_and_shape(inst_r2):
    g, o, loc = inst_r2
    r = 2
    P = GraphParams(400, 1.0, r, o.d, seed=3)
    for stop in (10, 60, 119):
        st_ = simulate_graph(g, o, loc, P, stop_after=stop).state
        rows = st_.p[[o.order[i] for i in range(stop, g.n)]]
        nz = rows[rows > 0]
        assert nz.min() >= P.alpha * (1 - 1e-9) and nz.max() <= 1.0
        # nonzero weights are alpha (2r)^t, capped at 1
        t = np.round(np.log(nz / P.alpha) / np.log(2 * r))
        ok = np.isclose(nz, P.alpha * (2 * r) ** t, rtol=1e-9) | (nz == 1.0)
        assert ok.all()


def test_bad_sets_monotone(inst_r2):
    g, o, loc = inst_r2
    P = GraphParams(300, 1.0, 2, o.d, seed=5, alpha=0.2)
    prev = simulate_graph(g, o, loc, P, stop_after=0).state
    for stop in range(1, g.n, 9):
        cur = simulate_graph(g, o, loc, P, stop_after=stop).state
        for i in range(stop, g.n):
            v = o.order[i]
            assert not (prev.bad[v] & ~cur.bad[v]).any()
            assert np.all(cur.p[v][cur.bad[v]] == 1.0)
        prev = cur


def test_processed_rows_frozen(inst_r2):
    g, o, loc = inst_r2
    P = GraphParams(200, 1.0, 2, o.d, seed=9)
    mid = simulate_graph(g, o, loc, P, stop_after=40).state
    end = simulate_graph(g, o, loc, P).state
    for i in range(40):
        v = o.order[i]
        assert np.array_equal(mid.p[v], end.p[v])
        assert np.array_equal(mid.selected[v], end.selected[v])


def test_flip_override_changes_one_draw(inst_r2):
    g, o, loc = inst_r2
    P = GraphParams(200, 1.0, 2, o.d, seed=4)
    base = simulate_graph(g, o, loc, P)
    v0 = o.order[0]
    c = min(base.sets.sets[v0])
    for backend in ("numba", "numpy"):
        run = simulate_graph(g, o, loc, P, flip=(0, c, ACT, 0), flip_u=0.999999, backend=backend)
        assert c not in run.sets.sets[v0]
        assert run.sets.sets[v0] == tuple(x for x in base.sets.sets[v0] if x != c)


def test_initial_trace_identities(inst_r2):
    g, o, loc = inst_r2
    P = GraphParams(700, 1.0, 2, o.d, seed=2)
    _, tr = run_graph_coloring(g, o, loc, P, watch=[1, 2, 3])
    assert tr.iterations == g.n
    assert initial_identities(tr, P.q, P.alpha)
    # bad counts never decrease before a vertex is processed
    assert np.all(np.diff(tr.bad_hi, axis=0)[: o.position[1]] >= 0)


def test_validation_errors(inst_r2):
    g, o, loc = inst_r2
    with pytest.raises(DomainError):
        simulate_graph(g, o, loc, GraphParams(10, 1.0, 3, o.d))
    with pytest.raises(DomainError):
        simulate_graph(g, o, loc, GraphParams(10, 1.0, 2, 2, alpha=0.1))
    other = build_graph(g.n, [(0, 1)])
    with pytest.raises(StructureError):
        simulate_graph(other, o, loc, GraphParams(10, 1.0, 2, o.d))
    with pytest.raises(InstanceError):
        simulate_graph(build_hypergraph(3, 3, []), o, loc, GraphParams(10, 1.0, 2, o.d))
    with pytest.raises(DomainError):
        GraphParams(0, 1.0, 1, 10)
    with pytest.raises(DomainError):
        GraphParams(10, 1.0, 1, 10, alpha=1.5)


def test_k2_every_branch_valid():
    g = build_graph(2, [(0, 1)])
    for p0 in (Fraction(1, 10), Fraction(1, 2), Fraction(1)):
        assert exact_oracle(g, p0, "graph", r=1).validity == 1


@pytest.mark.parametrize("p0", P0S, ids=str)
@pytest.mark.parametrize("name,g,r", graph_catalog(), ids=[c[0] for c in graph_catalog()])
def test_kernel_matches_oracle_distribution(name, g, r, p0):
    """Each color is an independent copy, so one wide run samples the oracle's law."""
    loc = find_local_coloring(g, r)
    o = degeneracy_ordering(g)
    ora = exact_oracle(g, p0, "graph", r=r, classes=loc)
    assert ora.validity == 1
    P = GraphParams(40000, 1.0, r, max(2, o.d), seed=17, alpha=float(p0))
    run = simulate_graph(g, o, loc, P, check=True)
    for v in range(g.n):
        bad = distribution_mismatches(run.state.p[v], ora.distributions[v])
        assert not bad, (v, bad)
    sel_rate = run.state.selected.mean(axis=1)
    for v in range(g.n):
        # half the weight when processed; weight 1 means pinned, which is never selected
        expect = float(sum(w * pr for w, pr in ora.distributions[v].items() if w < 1)) / 2
        assert abs(sel_rate[v] - expect) < 5 * (expect * (1 - expect) / P.q) ** 0.5 + 1e-12
