"""Undirected simple graphs with bitset adjacency, plus per-vertex edge-pair
incompatibility systems and the compatibility queries built on them."""

from __future__ import annotations

from typing import Iterable, Iterator

Edge = tuple[int, int]

_EMPTY: frozenset[Edge] = frozenset()


class GraphError(ValueError):
    """Raised for malformed graphs, systems, paths or cycles."""


def edge(u: int, v: int) -> Edge:
    """Canonical unordered edge (u < v)."""
    if u == v:
        raise GraphError(f"self-loop at {u}")
    return (u, v) if u < v else (v, u)


class Graph:
    """Immutable simple graph on vertices 0..n-1.

    Adjacency is one int bitmask per vertex; degree queries are popcounts and
    set queries are mask intersections.
    """

    __slots__ = ("n", "edge_count", "_adj")

    def __init__(self, n: int, edges: Iterable[Edge] = ()):
        if n < 0:
            raise GraphError("vertex count must be non-negative")
        self.n = n
        adj = [0] * n
        count = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"endpoint out of range: ({u}, {v})")
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if (adj[u] >> v) & 1:
                raise GraphError(f"duplicate edge ({u}, {v})")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
            count += 1
        self._adj = tuple(adj)
        self.edge_count = count

    def adjacency_mask(self, v: int) -> int:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return self._adj[v].bit_count()

    def min_degree(self) -> int:
        return min((m.bit_count() for m in self._adj), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return u != v and 0 <= u < self.n and 0 <= v < self.n and (self._adj[u] >> v) & 1 == 1

    def neighbors(self, v: int) -> Iterator[int]:
        """Neighbors of v in ascending order."""
        mask = self._adj[v]
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def edges(self) -> Iterator[Edge]:
        """All edges (u, v) with u < v, in lexicographic order."""
        for u in range(self.n):
            mask = self._adj[u] >> (u + 1)
            while mask:
                low = mask & -mask
                yield (u, u + 1 + low.bit_length() - 1)
                mask ^= low

    def vertices(self) -> range:
        return range(self.n)

    def without_edges(self, removed: Iterable[Edge]) -> "Graph":
        dropped = {edge(u, v) for u, v in removed}
        return Graph(self.n, (e for e in self.edges() if e not in dropped))

    def with_edges(self, added: Iterable[Edge]) -> "Graph":
        new = [e for e in (edge(u, v) for u, v in added) if not self.has_edge(*e)]
        return Graph(self.n, list(self.edges()) + sorted(set(new)))

    def subgraph(self, vertices: Iterable[int]) -> tuple["Graph", dict[int, int]]:
        """Induced subgraph on `vertices`, relabeled 0..k-1 by ascending id.

        Returns the graph and the old-id -> new-id map.
        """
        order = sorted(set(vertices))
        relabel = {v: i for i, v in enumerate(order)}
        sub_edges = [
            (relabel[u], relabel[v])
            for u, v in self.edges()
            if u in relabel and v in relabel
        ]
        return Graph(len(order), sub_edges), relabel

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self._adj == other._adj

    def __hash__(self) -> int:
        return hash((self.n, self._adj))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count})"


def new_graph(n: int, edges: Iterable[Edge]) -> Graph:
    return Graph(n, edges)


def is_dirac(g: Graph) -> bool:
    """True iff n >= 3 and every degree is at least ceil(n/2)."""
    return g.n >= 3 and g.min_degree() >= (g.n + 1) // 2


def edges_between(g: Graph, a: Iterable[int], b: Iterable[int]) -> int:
    """Edges with one endpoint in `a` and the other in `b`, counted with
    multiplicity for overlaps, so edges_between(g, X, X) == 2 * internal(X)."""
    mask_b = 0
    for v in b:
        mask_b |= 1 << v
    return sum((g.adjacency_mask(u) & mask_b).bit_count() for u in set(a))


def internal_edges(g: Graph, vertices: Iterable[int]) -> int:
    return edges_between(g, vertices, vertices) // 2


class IncompatSystem:
    """Per-vertex families of forbidden unordered pairs of incident edges.

    Each pair {e, e'} lives at the shared vertex v = e ∩ e' and is stored in
    both directions, so symmetric lookups cost one dict access.
    """

    __slots__ = ("n", "_conflicts", "_pair_count", "_bound", "_corr_counts")

    def __init__(self, g: Graph, triples: Iterable[tuple[int, int, int]] = ()):
        self.n = g.n
        conflicts: dict[tuple[int, Edge], set[Edge]] = {}
        pairs = set()
        for v, a, b in triples:
            e1, e2 = edge(v, a), edge(v, b)
            if e1 == e2:
                raise GraphError(f"degenerate pair at {v}: ({a}, {b})")
            if not g.has_edge(*e1) or not g.has_edge(*e2):
                raise GraphError(f"pair at {v} references a non-edge: ({a}, {b})")
            conflicts.setdefault((v, e1), set()).add(e2)
            conflicts.setdefault((v, e2), set()).add(e1)
            pairs.add((v, min(e1, e2), max(e1, e2)))
        self._conflicts: dict[tuple[int, Edge], frozenset[Edge]] = {
            k: frozenset(s) for k, s in conflicts.items()
        }
        self._pair_count = len(pairs)
        self._bound = max((len(s) for s in self._conflicts.values()), default=0)
        self._corr_counts: dict[tuple[int, int], int] | None = None

    @classmethod
    def empty(cls, g: Graph) -> "IncompatSystem":
        return cls(g, ())

    @classmethod
    def from_triples(cls, g: Graph, triples: Iterable[tuple[int, int, int]]) -> "IncompatSystem":
        return cls(g, triples)

    @property
    def pair_count(self) -> int:
        return self._pair_count

    def boundedness(self) -> int:
        """Max over (v, incident edge e) of edges incompatible with e at v."""
        return self._bound

    def conflicts_at(self, v: int, e: Edge) -> frozenset[Edge]:
        return self._conflicts.get((v, e), _EMPTY)

    def is_incompatible(self, e1: Edge, e2: Edge) -> bool:
        """Whether {e1, e2} is a stored pair; non-incident edges are never
        incompatible."""
        if not self._pair_count:
            return False
        if e1[0] in e2:
            v = e1[0]
        elif e1[1] in e2:
            v = e1[1]
        else:
            return False
        return e2 in self._conflicts.get((v, e1), _EMPTY)

    def is_compatible(self, e1: Edge, e2: Edge) -> bool:
        return not self.is_incompatible(e1, e2)

    def correlated_count(self, v1: int, v2: int) -> int:
        """Vertices w at which the stored pairs make {v1,w} and {v2,w}
        incompatible. A property of the system over its host graph; it does
        not change when working on an edge-reduced copy of the host."""
        if v1 == v2:
            raise GraphError("correlation is defined for distinct vertices")
        if self._corr_counts is None:
            counts: dict[tuple[int, int], int] = {}
            for _, a, b in self.triples():
                key = (a, b) if a < b else (b, a)
                counts[key] = counts.get(key, 0) + 1
            self._corr_counts = counts
        key = (v1, v2) if v1 < v2 else (v2, v1)
        return self._corr_counts.get(key, 0)

    def triples(self) -> list[tuple[int, int, int]]:
        """Canonical (v, a, b) list, one per stored pair, sorted."""
        seen = set()
        for (v, e1), partners in self._conflicts.items():
            for e2 in partners:
                a = e1[0] if e1[1] == v else e1[1]
                b = e2[0] if e2[1] == v else e2[1]
                seen.add((v, min(a, b), max(a, b)))
        return sorted(seen)

    def without_pairs(self, g: Graph, pairs: Iterable[tuple[Edge, Edge]]) -> "IncompatSystem":
        """New system with the given pairs made compatible."""
        drop = set()
        for e1, e2 in pairs:
            shared = set(e1) & set(e2)
            if len(shared) != 1:
                raise GraphError(f"pair {e1}, {e2} does not share exactly one vertex")
            v = shared.pop()
            a = e1[0] if e1[1] == v else e1[1]
            b = e2[0] if e2[1] == v else e2[1]
            drop.add((v, min(a, b), max(a, b)))
        return IncompatSystem(g, (t for t in self.triples() if t not in drop))

    def __repr__(self) -> str:
        return f"IncompatSystem(n={self.n}, pairs={self._pair_count}, bound={self._bound})"


def boundedness(g: Graph, system: IncompatSystem) -> int:
    return system.boundedness()


def is_compatible_pair(system: IncompatSystem, e1: Edge, e2: Edge) -> bool:
    """Pair compatibility for two edges sharing exactly one vertex."""
    if e1 == e2 or len(set(e1) & set(e2)) != 1:
        raise GraphError(f"edges {e1} and {e2} do not share exactly one vertex")
    return system.is_compatible(e1, e2)


def path_edges(seq: Iterable[int]) -> list[Edge]:
    s = list(seq)
    return [edge(s[i], s[i + 1]) for i in range(len(s) - 1)]


def cycle_edges(seq: Iterable[int]) -> list[Edge]:
    s = list(seq)
    return path_edges(s) + [edge(s[-1], s[0])]


def is_valid_path(g: Graph, seq: Iterable[int]) -> bool:
    s = list(seq)
    if not s or len(set(s)) != len(s):
        return False
    if any(not (0 <= v < g.n) for v in s):
        return False
    return all(g.has_edge(s[i], s[i + 1]) for i in range(len(s) - 1))


def is_valid_cycle(g: Graph, seq: Iterable[int]) -> bool:
    s = list(seq)
    return len(s) >= 3 and is_valid_path(g, s) and g.has_edge(s[-1], s[0])


def _consecutive_pairs_ok(system: IncompatSystem, edges_seq: list[Edge], closed: bool) -> bool:
    k = len(edges_seq)
    for i in range(k - 1):
        if system.is_incompatible(edges_seq[i], edges_seq[i + 1]):
            return False
    if closed and k >= 2 and system.is_incompatible(edges_seq[-1], edges_seq[0]):
        return False
    return True


def is_compatible_path(g: Graph, system: IncompatSystem, seq: Iterable[int]) -> bool:
    """Whether every pair of consecutive path edges is compatible."""
    s = list(seq)
    if not is_valid_path(g, s):
        raise GraphError(f"not a valid path: {s}")
    return _consecutive_pairs_ok(system, path_edges(s), closed=False)


def is_compatible_cycle(g: Graph, system: IncompatSystem, seq: Iterable[int]) -> bool:
    """Path check plus the two wrap-around pairs at the closing edge."""
    s = list(seq)
    if not is_valid_cycle(g, s):
        raise GraphError(f"not a valid cycle: {s}")
    return _consecutive_pairs_ok(system, cycle_edges(s), closed=True)


def is_hamilton_cycle(g: Graph, seq: Iterable[int]) -> bool:
    s = list(seq)
    return len(s) == g.n and is_valid_cycle(g, s)


def verify_hamilton_compatible(g: Graph, system: IncompatSystem, seq: Iterable[int]) -> bool:
    """Full certification: Hamilton cycle of g and compatible with the system."""
    s = list(seq)
    return is_hamilton_cycle(g, s) and is_compatible_cycle(g, system, s)
