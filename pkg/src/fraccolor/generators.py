"""Seeded random instance families, each re-certified by its validator."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, LocalColoringError, RetryExhausted, StructureError
from .instances import (
    Graph, Hypergraph, Instance, LocalColoring, build_graph, build_hypergraph, check_linear,
    check_triangle_free, degeneracy_ordering, find_local_coloring, local_coloring_to_json, write_instance,
)


@dataclass(frozen=True)
class GenSpec:
    n: int
    d: int
    r: int = 1
    seed: int = 0
    max_retries: int = 50
    strict: bool = False  # raise instead of settling for fewer edges

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.r < 1 or self.max_retries < 1:
            raise DomainError(f"GenSpec needs n, d, r, max_retries >= 1 (got {self})")


def _rng(spec: GenSpec, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng([spec.seed, salt])


def gen_triangle_free_degenerate(spec: GenSpec, stats: dict | None = None) -> Graph:
    """Each new vertex links to up to ``d`` earlier, pairwise non-adjacent vertices."""
    rng = _rng(spec)
    nbrs: list[set[int]] = [set() for _ in range(spec.n)]
    edges = []
    rejected = 0
    short = 0
    for v in range(1, spec.n):
        want = min(spec.d, v)
        chosen: list[int] = []
        tries = 0
        while len(chosen) < want and tries < spec.max_retries:
            u = int(rng.integers(v))
            if u in chosen or any(w in nbrs[u] for w in chosen):
                tries += 1
                rejected += 1
                continue
            chosen.append(u)
            tries = 0
        if len(chosen) < want:
            if spec.strict:
                raise RetryExhausted(f"vertex {v}: placed {len(chosen)} of {want} edges")
            short += 1
        for u in chosen:
            nbrs[u].add(v)
            nbrs[v].add(u)
            edges.append((u, v))
    if stats is not None:
        stats.update(rejections=rejected, short_vertices=short)
    return build_graph(spec.n, edges)


def _join_blowup(base: Graph, r: int) -> tuple[Graph, LocalColoring]:
    # vertex u*r + a; r-clique per base vertex, (u,a)~(w,b) across base edges iff a != b
    edges = []
    for u in range(base.n):
        edges.extend((u * r + a, u * r + b) for a, b in itertools.combinations(range(r), 2))
    for u, w in base.edges:
        edges.extend((u * r + a, w * r + b) for a in range(r) for b in range(r) if a != b)
    g = build_graph(base.n * r, edges)
    loc = LocalColoring(r, tuple(tuple(x % r for x in g.adjacency[v]) for v in range(g.n)))
    return g, loc


def gen_locally_r_colorable(spec: GenSpec, stats: dict | None = None) -> tuple[Graph, LocalColoring]:
    """Blow up a triangle-free base so every neighborhood is r-colorable.

    ``spec.n`` is the target vertex count; the base has ``n // r`` vertices.
    Each base vertex becomes an r-clique, and cliques of adjacent base
    vertices are joined completely except for equal positions. Positions
    are a proper coloring of every neighborhood.
    """
    base_n = max(1, spec.n // spec.r)
    d = spec.d
    for attempt in range(spec.max_retries):
        base_spec = GenSpec(base_n, d, 1, spec.seed + attempt, spec.max_retries, spec.strict)
        base = gen_triangle_free_degenerate(base_spec, stats)
        if spec.r == 1:
            g, loc = base, LocalColoring(1, tuple(tuple(0 for _ in a) for a in base.adjacency))
        else:
            g, loc = _join_blowup(base, spec.r)
        try:
            find_local_coloring(g, spec.r)
        except LocalColoringError:
            d = max(1, d - 1)
            continue
        if not loc.is_proper(g):
            raise StructureError("blow-up produced an improper local coloring")
        if stats is not None:
            stats.update(base_n=base_n, base_d=d, attempts=attempt + 1)
        return g, loc
    raise RetryExhausted(f"no locally {spec.r}-colorable candidate after {spec.max_retries} attempts")


def gen_linear_girth4_hypergraph(spec: GenSpec, stats: dict | None = None) -> Hypergraph:
    """Each new vertex tries ``d`` edges on ``r - 1`` earlier vertices.

    A candidate is rejected if it covers an already covered pair (linearity)
    or if two of its vertices have a common neighbor in the 2-shadow, which
    under linearity is exactly a triangle through the new edge.
    """
    r = spec.r
    if r < 2:
        raise DomainError(f"hypergraphs need r >= 2, got {r}")
    rng = _rng(spec)
    shadow: list[set[int]] = [set() for _ in range(spec.n)]
    edges = []
    rej_lin = rej_tri = short = 0
    for v in range(r - 1, spec.n):
        for _ in range(spec.d):
            placed = False
            for _ in range(spec.max_retries):
                pick = rng.choice(v, size=r - 1, replace=False)
                e = [int(x) for x in pick] + [v]
                if any(y in shadow[x] for x, y in itertools.combinations(e, 2)):
                    rej_lin += 1
                    continue
                if any(shadow[x] & shadow[y] for x, y in itertools.combinations(e, 2)):
                    rej_tri += 1
                    continue
                for x, y in itertools.combinations(e, 2):
                    shadow[x].add(y)
                    shadow[y].add(x)
                edges.append(tuple(sorted(e)))
                placed = True
                break
            if not placed:
                if spec.strict:
                    raise RetryExhausted(f"vertex {v}: edge placement failed after {spec.max_retries} tries")
                short += 1
    if stats is not None:
        stats.update(rejections_linear=rej_lin, rejections_triangle=rej_tri, short_edges=short)
    return build_hypergraph(spec.n, r, edges)


def certify(inst: Instance, loc: LocalColoring | None = None) -> dict:
    """Validator results and achieved degeneracy for a sidecar."""
    ordering = degeneracy_ordering(inst)
    out: dict = {"n": inst.n, "m": inst.m, "degeneracy": ordering.d}
    if isinstance(inst, Hypergraph):
        out["r"] = inst.r
        out["linear"] = check_linear(inst).ok
        out["triangle_free"] = check_triangle_free(inst).ok
    else:
        if loc is None or loc.r == 1:
            out["triangle_free"] = check_triangle_free(inst.as_hypergraph()).ok
        if loc is not None:
            out["r"] = loc.r
            out["local_coloring_proper"] = loc.is_proper(inst)
    return out


def write_with_sidecar(inst: Instance, path: str | Path, spec: GenSpec, family: str,
                       stats: dict, loc: LocalColoring | None = None) -> dict:
    path = Path(path)
    write_instance(inst, path)
    side = {"family": family, "spec": asdict(spec), "validators": certify(inst, loc), "stats": stats}
    if loc is not None:
        lc_path = path.with_name(path.name + ".local.json")
        lc_path.write_text(json.dumps(local_coloring_to_json(loc, inst)) + "\n")
        side["local_coloring"] = lc_path.name
    path.with_name(path.name + ".json").write_text(json.dumps(side, indent=2) + "\n")
    return side
