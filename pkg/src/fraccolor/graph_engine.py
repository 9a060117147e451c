"""Fractional coloring of degenerate, locally r-colorable graphs.

Vertices are processed along a degeneracy ordering. Each color of the
current vertex is activated with probability equal to its weight, then
selected with probability 1/2; the outcome reweights the same color at the
right-neighbors so that every weight stays a martingale while selected
colors are removed from all later neighbors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels_numba, _kernels_numpy, rules
from ._accel import resolve
from .errors import DomainError, InstanceError, StructureError
from .instances import DegeneracyOrdering, Graph, LocalColoring
from .results import ColorSets, RunTrace, sets_from_selection
from .rng import check_seed
from .rules import alpha_graph, equalizer_prob_graph as _mu_graph

GRAPH_COUNTERS = (
    "skip_pinned", "case_b", "case_c", "coins", "pins", "range_violations",
    "class_violations", "pin_violations", "activations", "selections", "prob_violations",
)


@dataclass(frozen=True)
class GraphParams:
    """Run parameters. ``alpha`` defaults to the closed form in ``d, r, eps``."""

    q: int
    eps: float
    r: int
    d: int
    seed: int = 0
    alpha: float = field(default=float("nan"))
    alpha_override: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.q < 1:
            raise DomainError(f"q must be at least 1, got {self.q}")
        if self.r < 1:
            raise DomainError(f"r must be at least 1, got {self.r}")
        check_seed(self.seed)
        if math.isnan(self.alpha):
            object.__setattr__(self, "alpha", alpha_graph(self.d, self.r, self.eps))
        else:
            if not 0 < self.alpha < 1:
                raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
            object.__setattr__(self, "alpha_override", True)

    def with_seed(self, seed: int) -> "GraphParams":
        return GraphParams(self.q, self.eps, self.r, self.d, seed,
                           self.alpha if self.alpha_override else float("nan"))

    def with_q(self, q: int) -> "GraphParams":
        return GraphParams(q, self.eps, self.r, self.d, self.seed,
                           self.alpha if self.alpha_override else float("nan"))

    def echo(self) -> dict:
        return {"q": self.q, "eps": self.eps, "r": self.r, "d": self.d, "seed": self.seed,
                "alpha": self.alpha, "alpha_override": self.alpha_override}


def equalizer_prob_graph(p_k: float, r: int) -> float:
    """Pin probability used when ``2 r p_k > 1``."""
    if not 1 / (2 * r) < p_k <= 1:
        raise DomainError(f"p_k must lie in (1/(2r), 1], got {p_k} with r={r}")
    return _mu_graph(p_k, r)


@dataclass
class WeightState:
    """Weights, bad flags and selections, all indexed by vertex.

    ``processed`` counts how many vertices of the ordering have been handled;
    rows of processed vertices are frozen.
    """

    p: np.ndarray
    bad: np.ndarray
    selected: np.ndarray
    processed: int
    ordering: DegeneracyOrdering

    def bad_set(self, v: int) -> set[int]:
        return set(np.flatnonzero(self.bad[v]).tolist())


@dataclass
class GraphRun:
    sets: ColorSets
    trace: RunTrace
    state: WeightState
    counters: dict[str, int]


def _graph_arrays(g: Graph, ordering: DegeneracyOrdering, loc: LocalColoring):
    n = g.n
    pos = ordering.position
    ptr = np.zeros(n + 1, dtype=np.int64)
    ks: list[int] = []
    cls: list[int] = []
    for i, v in enumerate(ordering.order):
        pairs = sorted((pos[u], loc.classes[v][t]) for t, u in enumerate(g.adjacency[v]) if pos[u] > i)
        ks.extend(k for k, _ in pairs)
        cls.extend(c for _, c in pairs)
        ptr[i + 1] = len(ks)
    return ptr, np.array(ks, dtype=np.int64), np.array(cls, dtype=np.int64)


def _validate(g: Graph, ordering: DegeneracyOrdering, loc: LocalColoring, params: GraphParams) -> None:
    if not isinstance(g, Graph):
        raise InstanceError("the graph engine needs a Graph instance")
    if ordering.n != g.n or set(ordering.edges) != set(g.edges):
        raise StructureError("ordering was computed for a different instance")
    if params.d < ordering.d:
        raise DomainError(f"params.d={params.d} is below the instance degeneracy {ordering.d}")
    if loc.r != params.r:
        raise DomainError(f"local coloring uses r={loc.r}, params use r={params.r}")
    if len(loc.classes) != g.n or any(len(loc.classes[v]) != len(g.adjacency[v]) for v in range(g.n)):
        raise StructureError("local coloring does not match the graph")


def simulate_graph(
    g: Graph,
    ordering: DegeneracyOrdering,
    loc: LocalColoring,
    params: GraphParams,
    *,
    watch: Sequence[int] = (),
    stop_after: int | None = None,
    check: bool = False,
    mutation: int = rules.MUT_NONE,
    flip: tuple[int, int, int, int] | None = None,
    flip_u: float = 0.0,
    backend: str | None = None,
    validate: bool = True,
) -> GraphRun:
    """One run with full state capture.

    ``stop_after`` processes only that many vertices of the ordering.
    ``flip = (i, c, kind, slot)`` replaces one addressed draw by ``flip_u``.
    """
    if validate:
        _validate(g, ordering, loc, params)
    n, q = g.n, params.q
    n_iter = n if stop_after is None else max(0, min(int(stop_after), n))
    ptr, rn_k, rn_cls = _graph_arrays(g, ordering, loc)
    p = np.full((n, q), params.alpha)
    bad = np.zeros((n, q), dtype=np.bool_)
    sel = np.zeros((n, q), dtype=np.bool_)
    watch_pos = np.array([ordering.position[v] for v in watch], dtype=np.int64)
    trace = np.zeros((n_iter + 1, len(watch_pos), 4))
    counters = np.zeros(_kernels_numba.G_NCOUNT, dtype=np.int64)
    flip_arr = np.array(flip if flip is not None else (-1, -1, -1, -1), dtype=np.int64)
    mod = _kernels_numba if resolve(backend) == "numba" else _kernels_numpy
    mod.graph_kernel(p, bad, sel, ptr, rn_k, rn_cls, params.r, np.uint64(params.seed),
                     int(mutation), bool(check), params.alpha, n_iter, flip_arr, float(flip_u),
                     watch_pos, trace, counters)
    pos = np.asarray(ordering.position, dtype=np.int64)
    state = WeightState(p[pos], bad[pos], sel[pos], n_iter, ordering)
    sets = ColorSets(q, params.alpha, sets_from_selection(state.selected), {"params": params.echo()})
    return GraphRun(sets, RunTrace.from_raw(watch, trace, sets.sizes), state,
                    dict(zip(GRAPH_COUNTERS, counters.tolist())))


def run_graph_coloring(
    g: Graph,
    ordering: DegeneracyOrdering,
    loc: LocalColoring,
    params: GraphParams,
    *,
    watch: Sequence[int] = (),
    check: bool = False,
    backend: str | None = None,
) -> tuple[ColorSets, RunTrace]:
    run = simulate_graph(g, ordering, loc, params, watch=watch, check=check, backend=backend)
    return run.sets, run.trace
