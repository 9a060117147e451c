"""Fractional coloring of degenerate r-uniform linear hypergraphs of girth at least 4.

A color enters ``S(v_i)`` when activated. For every edge in which ``v_i`` is
internal, the weight of that color at the edge's right-most vertex is
rescaled by the product of the still-undecided weights along the edge, so
that an edge whose internal vertices all pick the color forces a zero at its
last vertex. Two thresholds keep weights inside ``[alpha^(1+kappa), 1/2]``
through equalizing coins that preserve the mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels_numba, _kernels_numpy, rules
from ._accel import resolve
from .errors import DomainError, InstanceError, RegimeError, StructureError
from .instances import DegeneracyOrdering, Hypergraph, check_linear, check_triangle_free
from .results import ColorSets, RunTrace, sets_from_selection
from .rng import check_seed
from .rules import alpha_hyper, kappa_hyper

HYPER_COUNTERS = (
    "skip", "case_main", "case_upper", "case_lower", "coins", "pins_hi", "pins_lo",
    "range_violations", "x_violations", "pin_violations", "pair_violations", "activations",
    "prob_violations",
)


@dataclass(frozen=True)
class HyperParams:
    """Run parameters; ``alpha`` defaults to the closed form, ``kappa = eps/(1000 r)``."""

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
        if self.r < 2:
            raise DomainError(f"r must be at least 2, got {self.r}")
        check_seed(self.seed)
        if math.isnan(self.alpha):
            object.__setattr__(self, "alpha", alpha_hyper(self.d, self.r, self.eps))
        else:
            if not 0 < self.alpha < 0.5:
                raise DomainError(f"alpha must lie in (0, 1/2), got {self.alpha}")
            object.__setattr__(self, "alpha_override", True)

    @property
    def kappa(self) -> float:
        return kappa_hyper(self.r, self.eps)

    @property
    def lower(self) -> float:
        """The lower threshold alpha^(1+kappa)."""
        return self.alpha ** (1 + self.kappa)

    def with_seed(self, seed: int) -> "HyperParams":
        return HyperParams(self.q, self.eps, self.r, self.d, seed,
                           self.alpha if self.alpha_override else float("nan"))

    def with_q(self, q: int) -> "HyperParams":
        return HyperParams(q, self.eps, self.r, self.d, self.seed,
                           self.alpha if self.alpha_override else float("nan"))

    def echo(self) -> dict:
        return {"q": self.q, "eps": self.eps, "r": self.r, "d": self.d, "seed": self.seed,
                "alpha": self.alpha, "kappa": self.kappa, "lower": self.lower,
                "alpha_override": self.alpha_override}


@dataclass
class HyperWeightState:
    p: np.ndarray
    bad_hi: np.ndarray
    bad_lo: np.ndarray
    selected: np.ndarray
    processed: int
    ordering: DegeneracyOrdering


@dataclass(frozen=True)
class EdgeContext:
    """Update context for internal vertex ``v_i`` of edge ``e`` and color ``c``.

    ``X_prime`` is None when ``p(v_i, c) = 0``: activation is then impossible
    and only the identity update remains.
    """

    e: tuple[int, ...]
    i: int
    c: int
    k: int
    f: tuple[int, ...]
    X: float
    X_prime: float | None


def edge_context(e: Sequence[int], ordering: DegeneracyOrdering, i: int, weights, c: int) -> EdgeContext:
    """Context at step ``i`` (0-based position of the current vertex).

    ``weights`` is a HyperWeightState or a vertex-indexed weight matrix.
    """
    p = weights.p if hasattr(weights, "p") else weights
    pos = ordering.position
    vi = ordering.order[i]
    srt = sorted(e, key=pos.__getitem__)
    if vi not in srt or srt[-1] == vi:
        raise DomainError(f"vertex {vi} is not an internal vertex of edge {tuple(e)}")
    k = srt[-1]
    f = tuple(u for u in srt if pos[u] < i)
    rest = [u for u in srt if pos[u] > i and u != k]
    xp = 1.0
    for u in rest:
        xp *= float(p[u][c])
    pi = float(p[vi][c])
    if pi == 0:
        return EdgeContext(tuple(srt), i, c, k, f, 0.0, None)
    return EdgeContext(tuple(srt), i, c, k, f, pi * xp, xp)


def equalizer_probs_hyper(ctx: EdgeContext, p_i: float, p_k: float, alpha: float,
                          kappa: float) -> tuple[float | None, float | None]:
    """Equalizing probabilities ``(mu, ell)`` for the threshold cases.

    Each entry is None when its case does not apply. Boundary values (where
    mu = 0 or ell = 1) are accepted.
    """
    if ctx.X_prime is None or not 0 < p_i < 1:
        raise DomainError("equalizers need 0 < p(v_i, c) < 1")
    x, xp = ctx.X, ctx.X_prime
    thr = alpha ** (1 + kappa)
    up_strict = 2 * p_k > 1 - x
    lo_strict = 0 < p_k * (1 - xp) < (1 - x) * thr
    if up_strict and lo_strict:
        raise RegimeError(ctx.i, ctx.c, ctx.k)
    mu = ell = None
    if 2 * p_k >= 1 - x:
        mu = rules.equalizer_mu_hyper(x, xp, p_i, p_k)
    if 0 < p_k * (1 - xp) <= (1 - x) * thr:
        ell = rules.equalizer_ell_hyper(x, p_i, p_k, thr)
    if mu is None and ell is None:
        raise DomainError(f"no threshold case applies (p_k={p_k}, X={x}, X'={xp})")
    return mu, ell


@dataclass
class HyperRun:
    sets: ColorSets
    trace: RunTrace
    state: HyperWeightState
    counters: dict[str, int]


def _hyper_arrays(h: Hypergraph, ordering: DegeneracyOrdering):
    pos = np.asarray(ordering.position, dtype=np.int64)
    r, m = h.r, h.m
    epos = np.sort(pos[np.asarray(h.edges, dtype=np.int64).reshape(m, r)], axis=1) if m else np.zeros((0, r), np.int64)
    slots = sorted((int(epos[e, j]), e, j) for e in range(m) for j in range(r - 1))
    ptr = np.zeros(h.n + 1, dtype=np.int64)
    for i, _, _ in slots:
        ptr[i + 1] += 1
    np.cumsum(ptr, out=ptr)
    slot_edge = np.array([e for _, e, _ in slots], dtype=np.int64)
    slot_idx = np.array([j for _, _, j in slots], dtype=np.int64)
    return ptr, slot_edge, slot_idx, np.ascontiguousarray(epos)


def validate_hypergraph(h: Hypergraph) -> None:
    lin = check_linear(h)
    if not lin:
        raise StructureError(f"hypergraph is not linear: edges {lin.witness} share two vertices")
    tri = check_triangle_free(h)
    if not tri:
        raise StructureError(f"hypergraph has girth below 4: edges {tri.witness} form a triangle")


def simulate_hyper(
    h: Hypergraph,
    ordering: DegeneracyOrdering,
    params: HyperParams,
    *,
    watch: Sequence[int] = (),
    stop_after: int | None = None,
    check: bool = False,
    mutation: int = rules.MUT_NONE,
    flip: tuple[int, int, int, int] | None = None,
    flip_u: float = 0.0,
    reverse: bool = False,
    backend: str | None = None,
    validate: bool = True,
) -> HyperRun:
    """One run with full state capture; see ``simulate_graph`` for the extras.

    ``reverse`` walks each vertex's edges in reverse index order, which must
    not change the result.
    """
    if not isinstance(h, Hypergraph):
        raise InstanceError("the hypergraph engine needs a Hypergraph instance")
    if h.r != params.r:
        raise DomainError(f"params.r={params.r} does not match the instance uniformity {h.r}")
    if ordering.n != h.n or set(ordering.edges) != set(h.edges):
        raise StructureError("ordering was computed for a different instance")
    if params.d < ordering.d:
        raise DomainError(f"params.d={params.d} is below the instance degeneracy {ordering.d}")
    if validate:
        validate_hypergraph(h)
    n, q = h.n, params.q
    n_iter = n if stop_after is None else max(0, min(int(stop_after), n))
    ptr, slot_edge, slot_idx, epos = _hyper_arrays(h, ordering)
    thr = params.lower
    p = np.full((n, q), params.alpha)
    hi = np.zeros((n, q), dtype=np.bool_)
    lo = np.zeros((n, q), dtype=np.bool_)
    sel = np.zeros((n, q), dtype=np.bool_)
    watch_pos = np.array([ordering.position[v] for v in watch], dtype=np.int64)
    trace = np.zeros((n_iter + 1, len(watch_pos), 4))
    counters = np.zeros(_kernels_numba.H_NCOUNT, dtype=np.int64)
    err = np.full(3, -1, dtype=np.int64)
    flip_arr = np.array(flip if flip is not None else (-1, -1, -1, -1), dtype=np.int64)
    mod = _kernels_numba if resolve(backend) == "numba" else _kernels_numpy
    status = mod.hyper_kernel(p, hi, lo, sel, ptr, slot_edge, slot_idx, epos, thr,
                              np.uint64(params.seed), int(mutation), bool(check), n_iter,
                              flip_arr, float(flip_u), watch_pos, trace, counters, bool(reverse), err)
    if status == _kernels_numba.STATUS_REGIME:
        raise RegimeError(int(err[0]), int(err[1]), ordering.order[int(err[2])])
    pos = np.asarray(ordering.position, dtype=np.int64)
    state = HyperWeightState(p[pos], hi[pos], lo[pos], sel[pos], n_iter, ordering)
    header = {"r": params.r, "kappa": params.kappa, "params": params.echo()}
    sets = ColorSets(q, params.alpha, sets_from_selection(state.selected), header)
    return HyperRun(sets, RunTrace.from_raw(watch, trace, sets.sizes), state,
                    dict(zip(HYPER_COUNTERS, counters.tolist())))


def run_hypergraph_coloring(
    h: Hypergraph,
    ordering: DegeneracyOrdering,
    params: HyperParams,
    *,
    watch: Sequence[int] = (),
    check: bool = False,
    backend: str | None = None,
) -> tuple[ColorSets, RunTrace]:
    run = simulate_hyper(h, ordering, params, watch=watch, check=check, backend=backend)
    return run.sets, run.trace
