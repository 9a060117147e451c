"""Diagnostics, sampling, Monte Carlo estimators, the exact oracle and the regime checker."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import rules
from .errors import DomainError, RegimeError, StatisticalFailure
from .graph_engine import GraphParams, GraphRun, WeightState, simulate_graph
from .hyper_engine import HyperParams, HyperRun, HyperWeightState, simulate_hyper
from .instances import (
    DegeneracyOrdering, Graph, Hypergraph, Instance, LocalColoring, degeneracy_ordering,
    find_local_coloring,
)
from .results import ColorSets, RunTrace
from .rng import LABEL, derive_seed, draw

SE_MULT = 4.0
TINY = 1e-12

Params = GraphParams | HyperParams


# diagnostics ----------------------------------------------------------------

def potential(state, v: int) -> float:
    return float(state.p[v].sum())


def entropy(state, v: int) -> float:
    row = state.p[v]
    nz = row[row > 0]
    return float(-(nz * np.log(nz)).sum())


def energy(state, vj: int, vk: int, inst: Instance) -> float:
    """Pair energy at the state's step.

    Graphs: sum over colors not bad at ``vj`` of p(vj)p(vk), for an edge vj-vk.
    Hypergraphs: for the edge containing both with ``vk`` right-most, sum over
    colors selected by every processed vertex of the edge and bad at neither
    endpoint of the product of the remaining weights.
    """
    pos = state.ordering.position
    if isinstance(state, WeightState):
        if not isinstance(inst, Graph) or not inst.has_edge(vj, vk):
            raise DomainError(f"({vj}, {vk}) is not an edge")
        keep = ~state.bad[vj]
        return float((state.p[vj][keep] * state.p[vk][keep]).sum())
    edge = None
    for e in inst.edges:
        if vj in e and vk in e and max(e, key=pos.__getitem__) == vk:
            edge = e
            break
    if edge is None or vj == vk:
        raise DomainError(f"no edge contains {vj} and {vk} with {vk} right-most")
    f = [u for u in edge if pos[u] < state.processed]
    rest = [u for u in edge if pos[u] >= state.processed]
    mask = ~(state.bad_hi[vj] | state.bad_lo[vj] | state.bad_hi[vk] | state.bad_lo[vk])
    for u in f:
        mask &= state.selected[u]
    prod = np.ones(state.p.shape[1])
    for u in rest:
        prod = prod * state.p[u]
    return float(prod[mask].sum())


def initial_identities(trace: RunTrace, q: int, alpha: float, tol: float = 1e-9) -> bool:
    """Row 0 of a trace matches P = q alpha and Q = q alpha ln(1/alpha)."""
    if not trace.watch:
        return True
    p0 = q * alpha
    q0 = q * alpha * math.log(1 / alpha)
    return bool(np.all(np.abs(trace.P[0] - p0) <= tol * p0) and np.all(np.abs(trace.Q[0] - q0) <= tol * q0))


# sampling -------------------------------------------------------------------

def sample_label(q: int, seed: int) -> int:
    return min(q - 1, int(draw(seed, 0, 0, LABEL) * q))


def independent_set_for_label(sets: ColorSets, label: int) -> list[int]:
    return [v for v, s in enumerate(sets.sets) if label in s]


def sample_independent_set(sets: ColorSets, q: int | None = None, seed: int = 0) -> tuple[int, list[int]]:
    """Draw one uniform label and return ``(label, {v : label in S(v)})``."""
    q = sets.q if q is None else q
    label = sample_label(q, seed)
    return label, independent_set_for_label(sets, label)


def is_independent(inst: Instance, verts: Iterable[int]) -> bool:
    inside = set(verts)
    return not any(all(v in inside for v in e) for e in inst.edges)


# running many ---------------------------------------------------------------

def _single_run(inst, ordering, loc, params, seed, **kw) -> GraphRun | HyperRun:
    if isinstance(inst, Graph):
        return simulate_graph(inst, ordering, loc, params.with_seed(seed), validate=False, **kw)
    return simulate_hyper(inst, ordering, params.with_seed(seed), validate=False, **kw)


def run_many(inst: Instance, ordering: DegeneracyOrdering, loc: LocalColoring | None, params: Params,
             M: int, reduce: Callable, *, jobs: int = 1, salt: Sequence[int] = (),
             observe: Callable | None = None, **kw) -> list:
    """Apply ``reduce`` to ``M`` independent runs; seeds depend only on run index.

    Results come back in run order whatever ``jobs`` is. ``observe`` sees
    every full run before it is reduced (for invariant audits); extra
    keywords such as ``watch`` or ``check`` go to the engine.
    """
    if isinstance(inst, Graph) and loc is None:
        raise DomainError("graph runs need a local coloring")
    if isinstance(inst, Graph):
        simulate_graph(inst, ordering, loc, params, stop_after=0)  # validate once
    else:
        simulate_hyper(inst, ordering, params, stop_after=0)
    seeds = [derive_seed(params.seed, *salt, t) for t in range(M)]

    def one(s):
        run = _single_run(inst, ordering, loc, params, s, **kw)
        if observe is not None:
            observe(run)
        return reduce(run)

    if jobs <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(one, seeds))


@dataclass
class MarginalsReport:
    mean: np.ndarray
    se: np.ndarray
    M: int
    params: dict

    @property
    def min_mean(self) -> float:
        return float(self.mean.min()) if self.mean.size else 0.0

    def to_json(self) -> dict:
        return {"M": self.M, "params": self.params, "min_mean": self.min_mean,
                "mean": self.mean.tolist(), "se": self.se.tolist()}


def _mean_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = x.shape[0]
    return x.mean(axis=0), x.std(axis=0, ddof=1) / math.sqrt(m)


def estimate_marginals(inst: Instance, ordering: DegeneracyOrdering, loc: LocalColoring | None,
                       params: Params, M: int, *, jobs: int = 1, **kw) -> MarginalsReport:
    """Per-vertex mean of |S(v)|/q over ``M`` runs; ``kw`` goes to ``run_many``."""
    if M < 2:
        raise DomainError("M must be at least 2 for a standard error")
    rows = run_many(inst, ordering, loc, params, M, lambda run: run.sets.sizes / params.q, jobs=jobs, **kw)
    mean, se = _mean_se(np.array(rows))
    return MarginalsReport(mean, se, M, params.echo())


@dataclass
class MartingaleReport:
    cells: list[tuple[int, int]]
    mean: np.ndarray
    se: np.ndarray
    target: float
    flagged: int
    M: int
    max_fraction: float = 0.05

    @property
    def fraction(self) -> float:
        return self.flagged / max(1, len(self.cells))

    @property
    def passed(self) -> bool:
        return self.fraction <= self.max_fraction

    def to_json(self) -> dict:
        return {"M": self.M, "target": self.target, "cells": len(self.cells), "flagged": self.flagged,
                "fraction": self.fraction, "passed": self.passed}


def sample_cells(n: int, q: int, count: int, seed: int) -> list[tuple[int, int]]:
    rng = np.random.default_rng([seed, 1])
    total = n * q
    flat = rng.choice(total, size=min(count, total), replace=False)
    return [(int(x // q), int(x % q)) for x in np.sort(flat)]


def martingale_test(inst: Instance, ordering: DegeneracyOrdering, loc: LocalColoring | None,
                    params: Params, M: int, cells: Sequence[tuple[int, int]] | int = 200, *,
                    jobs: int = 1, mutation: int = rules.MUT_NONE, **kw) -> MartingaleReport:
    """Compare the run-mean of each cell's final weight with ``alpha``.

    The final weight of vertex v is its weight just before it was processed.
    A cell is flagged when its deviation exceeds 4 standard errors.
    """
    if M < 100:
        raise DomainError("martingale_test needs M >= 100")
    if isinstance(cells, int):
        cells = sample_cells(inst.n, params.q, cells, params.seed)
    vs = np.array([v for v, _ in cells], dtype=np.int64)
    cs = np.array([c for _, c in cells], dtype=np.int64)

    def reduce(run):
        return run.state.p[vs, cs]

    vals = np.array(run_many(inst, ordering, loc, params, M, reduce, jobs=jobs, mutation=mutation, **kw))
    mean, se = _mean_se(vals)
    flagged = int(np.count_nonzero(np.abs(mean - params.alpha) > SE_MULT * se + TINY))
    return MartingaleReport(list(cells), mean, se, params.alpha, flagged, M)


@dataclass
class SamplerAgreement:
    by_label: np.ndarray  # mean indicator of label in S(v)
    by_size: np.ndarray  # mean |S(v)|/q
    se_diff: np.ndarray
    M: int

    @property
    def agree(self) -> bool:
        return bool(np.all(np.abs(self.by_label - self.by_size) <= SE_MULT * self.se_diff + TINY))


def sampler_agreement(inst: Instance, ordering: DegeneracyOrdering, loc: LocalColoring | None,
                      params: Params, M: int, *, jobs: int = 1, **kw) -> SamplerAgreement:
    """Two estimates of Pr[v in I]: sampled-label membership and |S(v)|/q."""

    def reduce(run):
        seed = derive_seed(run.sets.header["params"]["seed"], LABEL)
        label, members = sample_independent_set(run.sets, params.q, seed)
        ind = np.zeros(inst.n)
        ind[members] = 1.0
        return np.stack([ind, run.sets.sizes / params.q])

    arr = np.array(run_many(inst, ordering, loc, params, M, reduce, jobs=jobs, **kw))
    diff = arr[:, 0] - arr[:, 1]
    _, se = _mean_se(diff) if M > 1 else (None, np.zeros(inst.n))
    return SamplerAgreement(arr[:, 0].mean(axis=0), arr[:, 1].mean(axis=0), se, M)


# concentration --------------------------------------------------------------

@dataclass
class ProbeReport:
    ladder: list[int]
    watch: list[int]
    sd: np.ndarray  # (rungs, |watch|) sd of |S(v)|/q
    ratios: np.ndarray  # (rungs - 1, |watch|)
    required: list[float]
    min_fraction: float = 0.9

    @property
    def fraction(self) -> float:
        ok = self.ratios >= np.array(self.required)[:, None]
        return float(ok.mean()) if ok.size else 1.0

    @property
    def passed(self) -> bool:
        return self.fraction >= self.min_fraction

    def to_json(self) -> dict:
        return {"ladder": self.ladder, "watch": self.watch, "sd": self.sd.tolist(),
                "ratios": self.ratios.tolist(), "required": self.required,
                "fraction": self.fraction, "passed": self.passed}


def concentration_probe(inst: Instance, ordering: DegeneracyOrdering, loc: LocalColoring | None,
                        base_params: Params, q_ladder: Sequence[int], M: int, *,
                        watch: Sequence[int] | None = None, jobs: int = 1,
                        trace_watch: Sequence[int] = (), **kw) -> ProbeReport:
    """sd of |S(v)|/q along a ladder of q; needs a 1.5x shrink per 4x in q.

    ``watch`` picks the vertices whose sd is measured; ``trace_watch`` is
    handed to the engine as its trace watch-set.
    """
    ladder = [int(x) for x in q_ladder]
    if len(ladder) < 2 or any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise DomainError("q_ladder must be strictly increasing with at least two rungs")
    if M < 100:
        raise DomainError("concentration_probe needs M >= 100")
    watch = list(range(inst.n)) if watch is None else list(watch)
    sds = []
    for t, q in enumerate(ladder):
        params = base_params.with_q(q)
        rows = run_many(inst, ordering, loc, params, M, lambda run: run.sets.sizes[watch] / q, jobs=jobs,
                        salt=(t,), watch=trace_watch, **kw)
        sds.append(np.array(rows).std(axis=0, ddof=1))
    sd = np.array(sds)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(sd[1:] > 0, sd[:-1] / sd[1:], np.inf)
    required = [1.5 ** math.log(b / a, 4) for a, b in zip(ladder, ladder[1:])]
    return ProbeReport(ladder, watch, sd, ratios, required)


# regime ---------------------------------------------------------------------

@dataclass
class RegimeReport:
    mode: str
    ok: bool
    domain_ok: bool
    alpha: float
    ratios: dict[str, float]
    limits: dict[str, float]
    exclusion_guaranteed: bool | None = None
    note: str = ""

    def to_json(self) -> dict:
        return {"mode": self.mode, "ok": self.ok, "domain_ok": self.domain_ok, "alpha": self.alpha,
                "ratios": self.ratios, "limits": self.limits,
                "exclusion_guaranteed": self.exclusion_guaranteed, "note": self.note}


def check_regime(d: float, r: int, eps: float, mode: str) -> RegimeReport:
    """Evaluate the ratios that the expectation bounds need.

    ``eps = 0`` evaluates the eps -> 0 limit of the closed forms.
    Graph: d ln(2r) alpha / ln(1/alpha) <= 1/2.
    Hypergraph: (r-1) d alpha^(r-1) / ln(1/(2 t)) <= 1/r and
    ln(1/alpha) / ln(1/(2 t)) <= 1 with t = alpha^(1+kappa). The upper and
    lower threshold cases can only coincide when t > 1/4, so t <= 1/4 is
    reported as the exclusion guarantee.
    """
    if eps < 0 or d < 2:
        raise DomainError("check_regime needs d >= 2 and eps >= 0")
    if mode == "graph":
        if r < 1:
            raise DomainError("graph mode needs r >= 1")
        a = math.log(d) / ((2 + eps / 8) * d * math.log(2 * r))
        if not 0 < a < 1:
            return RegimeReport(mode, False, False, a, {}, {"ratio": 0.5}, note="alpha outside (0, 1)")
        ratio = d * math.log(2 * r) * a / math.log(1 / a)
        return RegimeReport(mode, ratio <= 0.5, True, a, {"ratio": ratio}, {"ratio": 0.5})
    if mode == "hyper":
        if r < 2:
            raise DomainError("hyper mode needs r >= 2")
        a = (math.log(d) / ((1 + eps * r / 10) * r * (r - 1) * d)) ** (1 / (r - 1))
        kappa = eps / (1000 * r)
        limits = {"bad_set": 1 / r, "log": 1.0}
        if not 0 < a < 0.5:
            return RegimeReport(mode, False, False, a, {}, limits, note="alpha outside (0, 1/2)")
        t = a ** (1 + kappa)
        denom = math.log(1 / (2 * t))
        ratios = {"bad_set": (r - 1) * d * a ** (r - 1) / denom, "log": math.log(1 / a) / denom}
        ok = ratios["bad_set"] <= 1 / r and ratios["log"] <= 1
        return RegimeReport(mode, ok, True, a, ratios, limits, exclusion_guaranteed=t <= 0.25)
    raise DomainError(f"mode must be 'graph' or 'hyper', got {mode!r}")


# exact oracle ---------------------------------------------------------------

@dataclass
class OracleResult:
    expectations: dict[int, Fraction]  # vertex -> E[weight just before processing]
    validity: Fraction
    branches: int
    distributions: dict[int, dict[Fraction, Fraction]] = field(default_factory=dict)

    def exact(self, p0: Fraction) -> bool:
        return all(v == p0 for v in self.expectations.values())

    def to_json(self) -> dict:
        fmt = lambda x: f"{x.numerator}/{x.denominator}"
        return {"expectations": {str(v): fmt(x) for v, x in self.expectations.items()},
                "validity": fmt(self.validity), "branches": self.branches}


class TreeTooLarge(DomainError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        raise DomainError("oracle inputs must be exact rationals (Fraction, int or 'a/b')")
    return Fraction(x)


def exact_oracle(inst: Instance, p0, mode: str | None = None, r: int = 1,
                 classes: LocalColoring | None = None, *, lower=None, mutation: int = rules.MUT_NONE,
                 max_n: int = 5, max_edges: int = 6, max_branches: int = 2_000_000) -> OracleResult:
    """Enumerate the whole outcome tree with one color and exact weights.

    Graph mode follows activation, selection, class draw and equalizing coins;
    hypergraph mode follows activation and equalizing coins, with ``lower``
    (default 9/10 of ``p0``) as the rational lower threshold. Every update
    reads the pre-step weights. Returns each vertex's expected weight just
    before it is processed and the probability that no edge is fully selected.
    """
    p0 = _as_fraction(p0)
    mode = mode or ("graph" if isinstance(inst, Graph) else "hyper")
    if inst.n > max_n or inst.m > max_edges:
        raise TreeTooLarge(f"instance too large for enumeration (n={inst.n}, m={inst.m})")
    ordering = degeneracy_ordering(inst)
    if mode == "graph":
        if not isinstance(inst, Graph):
            raise DomainError("graph mode needs a Graph")
        if not 0 < p0 <= 1:
            raise DomainError("p0 must lie in (0, 1]")
        loc = classes if classes is not None else find_local_coloring(inst, r)
        return _oracle_graph(inst, ordering, loc, p0, mutation, max_branches)
    if mode == "hyper":
        h = inst.as_hypergraph() if isinstance(inst, Graph) else inst
        thr = p0 * Fraction(9, 10) if lower is None else _as_fraction(lower)
        if not 0 < thr <= p0 < Fraction(1, 2):
            raise DomainError("need 0 < lower <= p0 < 1/2")
        ordering = degeneracy_ordering(h)
        return _oracle_hyper(h, ordering, p0, thr, mutation, max_branches)
    raise DomainError(f"mode must be 'graph' or 'hyper', got {mode!r}")


class _Acc:
    def __init__(self, n, max_branches):
        self.exp = [Fraction(0)] * n
        self.dist = [dict() for _ in range(n)]
        self.valid = Fraction(0)
        self.branches = 0
        self.max_branches = max_branches

    def leaf(self, prob, final, sel, edges):
        self.branches += 1
        if self.branches > self.max_branches:
            raise TreeTooLarge(f"outcome tree exceeds {self.max_branches} branches")
        for v, w in enumerate(final):
            self.exp[v] += prob * w
            self.dist[v][w] = self.dist[v].get(w, Fraction(0)) + prob
        if not any(all(sel[u] for u in e) for e in edges):
            self.valid += prob


def _product_branches(items):
    """All assignments of independent coins: items are (key, prob_true)."""
    out = [((), Fraction(1))]
    for key, pt in items:
        nxt = []
        for assign, pr in out:
            if pt > 0:
                nxt.append((assign + ((key, True),), pr * pt))
            if pt < 1:
                nxt.append((assign + ((key, False),), pr * (1 - pt)))
        out = nxt
    return out


def _oracle_graph(g, ordering, loc, p0, mut, max_branches) -> OracleResult:
    n, order, pos = g.n, ordering.order, ordering.position
    acc = _Acc(n, max_branches)
    r = loc.r
    right = []
    for v in order:
        right.append([(u, loc.classes[v][t]) for t, u in enumerate(g.adjacency[v]) if pos[u] > pos[v]])

    def rec(i, p, bad, sel, final, prob):
        if i == n:
            acc.leaf(prob, final, sel, g.edges)
            return
        v = order[i]
        final = final[:]
        final[v] = p[v]
        pv = p[v]
        if bad[v] or pv == 0:
            rec(i + 1, p, bad, sel, final, prob)
            return
        # a = 0: nothing changes
        if pv < 1:
            rec(i + 1, p, bad, sel, final, prob * (1 - pv))
        for s in (False, True):
            for j in range(r):
                pr = prob * pv * Fraction(1, 2) * Fraction(1, r)
                live = [(u, cl) for u, cl in right[i] if not bad[u]]
                coins = [(u, rules.equalizer_prob_graph(p[u], r)) for u, cl in live
                         if rules.graph_needs_coin(p[u], s, cl == j, r)]
                for assign, pc in _product_branches(coins):
                    cmap = dict(assign)
                    p2, bad2 = p[:], bad[:]
                    for u, cl in live:
                        new, pin = rules.graph_rule(p[u], s, cl == j, cmap.get(u, False), r, mut)
                        p2[u] = Fraction(new)
                        if pin:
                            bad2[u] = True
                    sel2 = sel[:]
                    sel2[v] = s
                    rec(i + 1, p2, bad2, sel2, final, pr * pc)

    rec(0, [p0] * n, [False] * n, [False] * n, [None] * n, Fraction(1))
    return OracleResult({v: acc.exp[v] for v in range(n)}, acc.valid, acc.branches,
                        {v: acc.dist[v] for v in range(n)})


def _oracle_hyper(h, ordering, p0, thr, mut, max_branches) -> OracleResult:
    n, order, pos = h.n, ordering.order, ordering.position
    acc = _Acc(n, max_branches)
    srt = [sorted(e, key=pos.__getitem__) for e in h.edges]
    # slots of each vertex: (edge index, index of the vertex inside the sorted edge)
    slots = [[] for _ in range(n)]
    for ei, e in enumerate(srt):
        for j, u in enumerate(e[:-1]):
            slots[u].append((ei, j))

    def rec(i, p, bad, sel, final, prob):
        if i == n:
            acc.leaf(prob, final, sel, h.edges)
            return
        v = order[i]
        final = final[:]
        final[v] = p[v]
        pv = p[v]
        if bad[v] or pv == 0:
            rec(i + 1, p, bad, sel, final, prob)
            return
        for a in (True, False):
            pa = pv if a else 1 - pv
            if pa == 0:
                continue
            plan = []
            for ei, j in slots[v]:
                e = srt[ei]
                k = e[-1]
                if any(not sel[u] for u in e[:j]) or bad[k] or p[k] == 0:
                    continue
                xp = Fraction(1)
                for u in e[j + 1:-1]:
                    xp *= p[u]
                x = pv * xp
                case = rules.hyper_case(p[k], x, xp, thr)
                if case == rules.CASE_REGIME:
                    raise RegimeError(i, 0, k)
                pt = None
                if rules.hyper_needs_coin(case, a):
                    if case == rules.CASE_UPPER:
                        pt = rules.equalizer_mu_hyper(x, xp, pv, p[k])
                    else:
                        pt = rules.equalizer_ell_hyper(x, pv, p[k], thr)
                    if not 0 <= pt <= 1:
                        raise DomainError(f"equalizer probability {pt} outside [0, 1]")
                plan.append((k, case, x, xp, pt))
            coins = [(k, pt) for k, _, _, _, pt in plan if pt is not None]
            for assign, pc in _product_branches(coins):
                cmap = dict(assign)
                p2, bad2 = p[:], bad[:]
                for k, case, x, xp, pt in plan:
                    new, flag = rules.hyper_rule(case, p[k], x, xp, a, cmap.get(k, False), thr, mut)
                    p2[k] = Fraction(new) if not isinstance(new, Fraction) else new
                    if flag != rules.FLAG_NONE:
                        bad2[k] = True
                sel2 = sel[:]
                sel2[v] = a
                rec(i + 1, p2, bad2, sel2, final, prob * pa * pc)

    rec(0, [p0] * n, [False] * n, [False] * n, [None] * n, Fraction(1))
    return OracleResult({v: acc.exp[v] for v in range(n)}, acc.valid, acc.branches,
                        {v: acc.dist[v] for v in range(n)})


def raise_if_failed(passed: bool, what: str) -> None:
    if not passed:
        raise StatisticalFailure(f"{what} failed; statistical tests can fail by chance, re-run with a fresh seed")
