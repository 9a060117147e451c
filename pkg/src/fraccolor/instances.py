"""Graph and hypergraph instances, degeneracy orderings, and structural checks."""
from __future__ import annotations

import heapq
import itertools
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import BudgetExhausted, InstanceError, NotColorable


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, w) for u in range(self.n) for w in self.adjacency[u] if u < w)

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def has_edge(self, u: int, w: int) -> bool:
        a = self.adjacency[u]
        j = int(np.searchsorted(a, w))
        return j < len(a) and a[j] == w

    def as_hypergraph(self) -> "Hypergraph":
        return Hypergraph(self.n, 2, self.edges)


@dataclass(frozen=True)
class Hypergraph:
    n: int
    r: int
    edges: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for e in self.edges:
            for v in e:
                deg[v] += 1
        return deg

    def incidence(self) -> list[list[int]]:
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for idx, e in enumerate(self.edges):
            for v in e:
                inc[v].append(idx)
        return inc


Instance = Union[Graph, Hypergraph]


def edge_list(inst: Instance) -> tuple[tuple[int, ...], ...]:
    return inst.edges


@dataclass(frozen=True)
class DegeneracyOrdering:
    """A vertex order together with the left-edge structure it induces.

    ``order[i]`` is the vertex processed at step ``i`` (0-based), ``position``
    is the inverse permutation, and ``left_edges[v]`` lists the indices of the
    edges whose right-most vertex is ``v``.
    """

    order: tuple[int, ...]
    position: tuple[int, ...]
    d: int
    left_edges: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.order)

    def left_degree(self, v: int) -> int:
        return len(self.left_edges[v])

    def sorted_edge(self, idx: int) -> tuple[int, ...]:
        """Vertices of edge ``idx`` sorted by position."""
        return tuple(sorted(self.edges[idx], key=self.position.__getitem__))

    def left_neighbors(self, v: int) -> set[int]:
        out: set[int] = set()
        for idx in self.left_edges[v]:
            out.update(u for u in self.edges[idx] if u != v)
        return out

    def right_neighbors(self, v: int) -> set[int]:
        pv = self.position[v]
        out: set[int] = set()
        for e in self.edges:
            if v in e:
                k = max(e, key=self.position.__getitem__)
                if self.position[k] > pv:
                    out.add(k)
        return out

    def with_d(self, d: int) -> "DegeneracyOrdering":
        """Same ordering with the degeneracy overridden upward."""
        if d < self.d:
            raise ValueError(f"d can only be raised (computed {self.d}, asked {d})")
        return DegeneracyOrdering(self.order, self.position, d, self.left_edges, self.edges)


@dataclass(frozen=True)
class LocalColoring:
    """Per-vertex proper r-coloring of the neighborhood.

    ``classes[v][t]`` is the class of ``graph.adjacency[v][t]``.
    """

    r: int
    classes: tuple[tuple[int, ...], ...]

    def class_of(self, g: Graph, v: int, u: int) -> int:
        t = g.adjacency[v].index(u)
        return self.classes[v][t]

    def violations(self, g: Graph) -> list[tuple[int, int, int]]:
        """Triples (v, u, w) with u-w an edge inside N(v) sharing a class."""
        bad = []
        for v in range(g.n):
            cls = dict(zip(g.adjacency[v], self.classes[v]))
            for u in g.adjacency[v]:
                for w in g.adjacency[u]:
                    if u < w and w in cls and cls[u] == cls[w]:
                        bad.append((v, u, w))
        return bad

    def is_proper(self, g: Graph) -> bool:
        if len(self.classes) != g.n:
            return False
        for v in range(g.n):
            if len(self.classes[v]) != len(g.adjacency[v]):
                return False
            if any(not 0 <= c < self.r for c in self.classes[v]):
                return False
        return not self.violations(g)


def trivial_local_coloring(g: Graph, r: int = 1) -> LocalColoring:
    return LocalColoring(r, tuple(tuple(0 for _ in a) for a in g.adjacency))


# construction ---------------------------------------------------------------

def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    if n < 0:
        raise InstanceError(f"vertex count must be nonnegative, got {n}")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    dups = 0
    for e in edges:
        u, w = (int(x) for x in e)
        if not (0 <= u < n and 0 <= w < n):
            raise InstanceError(f"edge ({u}, {w}) has an index outside [0, {n})")
        if u == w:
            raise InstanceError(f"self-loop at vertex {u}")
        if w in nbrs[u]:
            dups += 1
            continue
        nbrs[u].add(w)
        nbrs[w].add(u)
    if dups:
        warnings.warn(f"dropped {dups} duplicate edge(s)", stacklevel=2)
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


def build_hypergraph(n: int, r: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    if r < 2:
        raise InstanceError(f"uniformity must be at least 2, got {r}")
    if n < 0:
        raise InstanceError(f"vertex count must be nonnegative, got {n}")
    seen: set[tuple[int, ...]] = set()
    out = []
    dups = 0
    for e in edges:
        raw = [int(x) for x in e]
        t = tuple(sorted(set(raw)))
        if len(t) != len(raw):
            raise InstanceError(f"edge {raw} repeats a vertex")
        if len(t) != r:
            raise InstanceError(f"edge {raw} has {len(t)} vertices, expected {r}")
        if t[0] < 0 or t[-1] >= n:
            raise InstanceError(f"edge {raw} has an index outside [0, {n})")
        if t in seen:
            dups += 1
            continue
        seen.add(t)
        out.append(t)
    if dups:
        warnings.warn(f"dropped {dups} duplicate edge(s)", stacklevel=2)
    return Hypergraph(n, r, tuple(out))


# degeneracy -----------------------------------------------------------------

def degeneracy_ordering(inst: Instance) -> DegeneracyOrdering:
    """Minimum-degree peeling; ties go to the smallest vertex index.

    Removing a vertex deletes every edge through it. The reverse of the
    removal order is returned, so each vertex's degree at removal time is its
    left-degree.
    """
    n = inst.n
    edges = inst.edges
    inc: list[list[int]] = [[] for _ in range(n)]
    for idx, e in enumerate(edges):
        for v in e:
            inc[v].append(idx)
    deg = [len(x) for x in inc]
    alive_edge = [True] * len(edges)
    removed = [False] * n
    heap = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    removal: list[int] = []
    d = 0
    while heap:
        dv, v = heapq.heappop(heap)
        if removed[v] or dv != deg[v]:
            continue
        removed[v] = True
        removal.append(v)
        d = max(d, dv)
        for idx in inc[v]:
            if not alive_edge[idx]:
                continue
            alive_edge[idx] = False
            for u in edges[idx]:
                if u != v:
                    deg[u] -= 1
                    heapq.heappush(heap, (deg[u], u))
    order = tuple(reversed(removal))
    position = [0] * n
    for i, v in enumerate(order):
        position[v] = i
    left: list[list[int]] = [[] for _ in range(n)]
    for idx, e in enumerate(edges):
        k = max(e, key=position.__getitem__)
        left[k].append(idx)
    return DegeneracyOrdering(order, tuple(position), d, tuple(tuple(x) for x in left), tuple(edges))


# validators -----------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    ok: bool
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_linear(h: Hypergraph) -> CheckReport:
    """ok iff no two edges share two or more vertices."""
    owner: dict[tuple[int, int], int] = {}
    for idx, e in enumerate(h.edges):
        for pair in itertools.combinations(e, 2):
            prev = owner.get(pair)
            if prev is not None:
                return CheckReport(False, (prev, idx))
            owner[pair] = idx
    return CheckReport(True)


def check_triangle_free(h: Hypergraph, *, assume_linear: bool = True) -> CheckReport:
    """Search for three edges pairwise meeting at points not all equal.

    The fast path is only valid for linear hypergraphs: there a triangle is
    three pairwise-intersecting edges whose intersection points are not all
    the same vertex. ``assume_linear=False`` scans the general definition.
    """
    if not assume_linear:
        return _triangle_scan_general(h)
    inc = h.incidence()
    for a, e in enumerate(h.edges):
        # edges meeting e, keyed by their (unique) meeting point
        meet: dict[int, int] = {}
        for x in e:
            for b in inc[x]:
                if b != a:
                    meet[b] = x
        others = sorted(meet)
        for i1, b in enumerate(others):
            if b < a:
                continue
            fb = set(h.edges[b])
            for c in others[i1 + 1:]:
                if c < a or meet[b] == meet[c]:
                    continue
                if fb.intersection(h.edges[c]):
                    return CheckReport(False, (a, b, c))
    return CheckReport(True)


def _triangle_scan_general(h: Hypergraph) -> CheckReport:
    inc = h.incidence()
    sets = [set(e) for e in h.edges]
    for a in range(h.m):
        nb = sorted({b for x in h.edges[a] for b in inc[x] if b > a})
        for i1, b in enumerate(nb):
            for c in nb[i1 + 1:]:
                if is_triangle(sets[a], sets[b], sets[c]):
                    return CheckReport(False, (a, b, c))
    return CheckReport(True)


def is_triangle(e: set[int], f: set[int], g: set[int]) -> bool:
    """Definition check: u in e&f, v in f&g, w in e&g with {u,v,w} off e&f&g."""
    core = e & f & g
    ef, fg, eg = (e & f) - core, (f & g) - core, (e & g) - core
    return bool(ef and fg and eg)


def find_local_coloring(g: Graph, r: int, budget: int = 100_000) -> LocalColoring:
    """Exact backtracking r-coloring of every neighborhood.

    ``budget`` caps search nodes per neighborhood. Raises ``NotColorable`` if
    the search completed without a coloring and ``BudgetExhausted`` if it was
    cut off.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    classes = []
    for v in range(g.n):
        nbhd = g.adjacency[v]
        col = _color_subgraph(g, nbhd, r, budget, v)
        classes.append(tuple(col[u] for u in nbhd))
    return LocalColoring(r, tuple(classes))


def _color_subgraph(g: Graph, verts: Sequence[int], r: int, budget: int, owner: int) -> dict[int, int]:
    vs = set(verts)
    adj = {u: [w for w in g.adjacency[u] if w in vs] for u in verts}
    # largest-degree-first static order keeps the search shallow on sparse neighborhoods
    order = sorted(verts, key=lambda u: (-len(adj[u]), u))
    color: dict[int, int] = {}
    nodes = 0

    def extend(t: int) -> bool:
        nonlocal nodes
        if t == len(order):
            return True
        nodes += 1
        if nodes > budget:
            raise BudgetExhausted(owner, nodes)
        u = order[t]
        used = {color[w] for w in adj[u] if w in color}
        top = min(r, max(color.values(), default=-1) + 2)  # symmetry breaking
        for c in range(top):
            if c in used:
                continue
            color[u] = c
            if extend(t + 1):
                return True
            del color[u]
        return False

    if not extend(0):
        raise NotColorable(owner, nodes)
    return color


# file formats ---------------------------------------------------------------

def _data_lines(text: str) -> list[list[str]]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line.split())
    return out


def parse_instance(text: str) -> Instance:
    lines = _data_lines(text)
    if not lines:
        raise InstanceError("empty instance file")
    head = lines[0]
    kind = head[0]
    try:
        if kind == "graph":
            n, m = int(head[1]), int(head[2])
            body = [tuple(int(x) for x in ln) for ln in lines[1:]]
            if len(body) != m or any(len(e) != 2 for e in body):
                raise InstanceError(f"expected {m} lines of two indices")
            return build_graph(n, body)
        if kind == "hypergraph":
            n, m, r = int(head[1]), int(head[2]), int(head[3])
            body = [tuple(int(x) for x in ln) for ln in lines[1:]]
            if len(body) != m:
                raise InstanceError(f"expected {m} edge lines, found {len(body)}")
            return build_hypergraph(n, r, body)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"bad header or body: {exc}") from exc
    raise InstanceError(f"unknown instance kind {kind!r}")


def format_instance(inst: Instance) -> str:
    if isinstance(inst, Graph):
        rows = [f"graph {inst.n} {inst.m}"] + [f"{u} {w}" for u, w in inst.edges]
    else:
        rows = [f"hypergraph {inst.n} {inst.m} {inst.r}"] + [" ".join(map(str, e)) for e in inst.edges]
    return "\n".join(rows) + "\n"


def read_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(format_instance(inst))


def local_coloring_to_json(loc: LocalColoring, g: Graph) -> dict:
    return {
        "r": loc.r,
        "classes": [[[u, c] for u, c in zip(g.adjacency[v], loc.classes[v])] for v in range(g.n)],
    }


def local_coloring_from_json(obj: dict, g: Graph) -> LocalColoring:
    rows = obj["classes"]
    if len(rows) != g.n:
        raise InstanceError("local coloring does not match the instance vertex count")
    classes = []
    for v, row in enumerate(rows):
        cls = dict((int(u), int(c)) for u, c in row)
        if sorted(cls) != list(g.adjacency[v]):
            raise InstanceError(f"local coloring row {v} does not match N({v})")
        classes.append(tuple(cls[u] for u in g.adjacency[v]))
    return LocalColoring(int(obj["r"]), tuple(classes))
