"""Structure pipeline for dense graphs whose rotation search stalls: the
sparse-pair dichotomy, two-phase partition refinement, the merged-clique and
contracted-bipartite reductions, and the two endgame solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .graphs import (
    Edge,
    Graph,
    GraphError,
    IncompatSystem,
    cycle_edges,
    edge,
    edges_between,
    is_compatible_cycle,
    verify_hamilton_compatible,
)
from .growth import (
    absorb_matched_pair,
    absorb_outside_vertex,
    grow_compatible_hamilton,
    preprocess_correlated,
)
from .matching import maximum_bipartite_matching
from .rotation import (
    DEFAULT_MU,
    PathState,
    ThresholdProfile,
    bipartite_profile,
    clique_profile,
    is_smooth,
)


class StructuralError(GraphError):
    """A structure-pipeline step found its input inconsistent with the sparse
    witness that produced it."""


class SeedPathError(StructuralError):
    """Seed-path construction ran out of candidates; carries the stage."""


@dataclass(frozen=True)
class SparsePairWitness:
    set_a: frozenset[int]
    set_b: frozenset[int]
    cross_count: int

    @classmethod
    def from_sets(cls, g: Graph, a: Iterable[int], b: Iterable[int]) -> "SparsePairWitness":
        fa, fb = frozenset(a), frozenset(b)
        return cls(fa, fb, edges_between(g, fa, fb))


def witness_valid(g: Graph, w: SparsePairWitness, nu: float, eta: float) -> bool:
    floor = (0.5 - nu) * g.n
    return len(w.set_a) >= floor and len(w.set_b) >= floor and w.cross_count <= eta * g.n * g.n


def classify_sparse_pair(
    g: Graph, a: Iterable[int], b: Iterable[int], nu: float, eta: float
) -> str:
    """Dichotomy on the intersection size: 'disjoint' below 3*eta*n,
    'identical' above (1/2 - 2nu - 3eta)*n, an error in the middle band."""
    inter = len(frozenset(a) & frozenset(b))
    n = g.n
    if inter < 3 * eta * n:
        return "disjoint"
    if inter > (0.5 - 2 * nu - 3 * eta) * n:
        return "identical"
    raise StructuralError(
        f"intersection size {inter} falls in the forbidden middle band for n={n}"
    )


def _same_part_neighbors(g: Graph, v: int, part_mask: int) -> int:
    return (g.adjacency_mask(v) & part_mask).bit_count()


def _mask(vertices: Iterable[int]) -> int:
    out = 0
    for v in vertices:
        out |= 1 << v
    return out


def refine_partition_case1(
    g: Graph, a0: Iterable[int], b0: Iterable[int]
) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    """Repeatedly move any vertex with at most n/6 neighbors in its own part
    to the other part. Returns both parts and the move count."""
    n = g.n
    part_a, part_b = set(a0), set(b0)
    if part_a & part_b or len(part_a) + len(part_b) != n:
        raise StructuralError("inputs must partition the vertex set")
    mask_a, mask_b = _mask(part_a), _mask(part_b)
    max_deg = max((g.degree(v) for v in range(n)), default=0)
    cap = 6 * max_deg + n + 1
    moves = 0
    while True:
        mover = None
        for v in range(n):
            own = mask_a if (mask_a >> v) & 1 else mask_b
            if 6 * ((g.adjacency_mask(v) & own).bit_count()) <= n:
                mover = v
                break
        if mover is None:
            break
        moves += 1
        if moves > cap:
            raise StructuralError("refinement did not terminate within the move cap")
        bit = 1 << mover
        if mask_a & bit:
            part_a.discard(mover); part_b.add(mover)
            mask_a ^= bit; mask_b |= bit
        else:
            part_b.discard(mover); part_a.add(mover)
            mask_b ^= bit; mask_a |= bit
    return tuple(sorted(part_a)), tuple(sorted(part_b)), moves


def refine_partition_case2(
    g: Graph, w0: Iterable[int]
) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    """Phase 1 moves vertices with at most n/6 cross neighbors; phase 2
    shrinks the larger part to ceil(n/2) by moving vertices with at least
    n/16 same-part neighbors, and errors if it stalls."""
    n = g.n
    part_w = set(w0)
    part_c = set(range(n)) - part_w
    mask_w, mask_c = _mask(part_w), _mask(part_c)
    cap = 3 * n + n + 1
    moves = 0
    while True:
        mover = None
        for v in range(n):
            cross = mask_c if (mask_w >> v) & 1 else mask_w
            if 6 * ((g.adjacency_mask(v) & cross).bit_count()) <= n:
                mover = v
                break
        if mover is None:
            break
        moves += 1
        if moves > cap:
            raise StructuralError("cross refinement did not terminate within the move cap")
        bit = 1 << mover
        if mask_w & bit:
            part_w.discard(mover); part_c.add(mover)
            mask_w ^= bit; mask_c |= bit
        else:
            part_c.discard(mover); part_w.add(mover)
            mask_c ^= bit; mask_w |= bit
    if len(part_w) < len(part_c):
        part_w, part_c = part_c, part_w
        mask_w, mask_c = mask_c, mask_w
    half = (n + 1) // 2
    while len(part_w) > half:
        mover = None
        for v in sorted(part_w):
            if 16 * ((g.adjacency_mask(v) & mask_w).bit_count()) >= n:
                mover = v
                break
        if mover is None:
            raise StructuralError(
                f"phase 2 stalled at |W|={len(part_w)} > {half}: no vertex has "
                f"n/16 same-part neighbors"
            )
        moves += 1
        bit = 1 << mover
        part_w.discard(mover); part_c.add(mover)
        mask_w ^= bit; mask_c |= bit
    return tuple(sorted(part_w)), tuple(sorted(part_c)), moves


def find_disjoint_cross_edges(g: Graph, w: Iterable[int]) -> tuple[Edge, Edge]:
    """Two vertex-disjoint edges crossing the (W, complement) cut, smallest
    lexicographic pair."""
    wset = frozenset(w)
    cross = [e for e in g.edges() if (e[0] in wset) != (e[1] in wset)]
    for idx, e1 in enumerate(cross):
        for e2 in cross[idx + 1:]:
            if not set(e1) & set(e2):
                return e1, e2
    raise StructuralError("no two vertex-disjoint crossing edges exist")


@dataclass
class MergedCliqueInstance:
    """The two one-side instances of the disjoint-ish case. Each side keeps
    its induced graph plus one artificial edge whose conflicts copy those of
    the crossing edges it replaces."""

    g1: Graph
    f1: IncompatSystem
    relabel1: dict[int, int]
    forced1: Edge
    g2: Graph
    f2: IncompatSystem
    relabel2: dict[int, int]
    forced2: Edge
    cross1: Edge
    cross2: Edge


def _merged_side(
    g: Graph,
    system: IncompatSystem,
    side: frozenset[int],
    u1: int,
    partner1: int,
    u2: int,
    partner2: int,
) -> tuple[Graph, IncompatSystem, dict[int, int], Edge]:
    sub, relabel = g.subgraph(side)
    art_orig = edge(u1, u2)
    art = edge(relabel[u1], relabel[u2])
    side_graph = sub.with_edges([art])
    triples: list[tuple[int, int, int]] = []
    for v, a, b in system.triples():
        if v not in side or a not in side or b not in side:
            continue
        if edge(v, a) == art_orig or edge(v, b) == art_orig:
            continue  # conflicts of a pre-existing {u1,u2} edge are redefined
        triples.append((relabel[v], relabel[a], relabel[b]))
    for u, partner in ((u1, partner1), (u2, partner2)):
        other = u2 if u == u1 else u1
        for z in g.neighbors(u):
            if z not in side or z == other:
                continue
            if system.is_incompatible(edge(u, partner), edge(u, z)):
                triples.append((relabel[u], relabel[other], relabel[z]))
    side_system = IncompatSystem(side_graph, triples)
    if side_system.boundedness() > max(system.boundedness(), 0):
        raise StructuralError("merged system exceeded the boundedness of its source")
    return side_graph, side_system, relabel, art


def build_merged_clique_instance(
    g: Graph, system: IncompatSystem, w: Iterable[int], e1: Edge, e2: Edge
) -> MergedCliqueInstance:
    wset = frozenset(w)
    if not set(e1).isdisjoint(e2):
        raise StructuralError("crossing edges must be vertex-disjoint")
    x1 = e1[0] if e1[0] in wset else e1[1]
    y1 = e1[1] if e1[0] in wset else e1[0]
    x2 = e2[0] if e2[0] in wset else e2[1]
    y2 = e2[1] if e2[0] in wset else e2[0]
    if x1 not in wset or x2 not in wset or y1 in wset or y2 in wset:
        raise StructuralError("each edge must cross the partition")
    comp = frozenset(range(g.n)) - wset
    g1, f1, map1, art1 = _merged_side(g, system, wset, x1, y1, x2, y2)
    g2, f2, map2, art2 = _merged_side(g, system, comp, y1, x1, y2, x2)
    return MergedCliqueInstance(g1, f1, map1, art1, g2, f2, map2, art2, e1, e2)


def stitch_merged_cycles(
    g: Graph,
    system: IncompatSystem,
    inst: MergedCliqueInstance,
    cycle1: tuple[int, ...],
    cycle2: tuple[int, ...],
) -> tuple[int, ...]:
    """Open both one-side Hamilton cycles at their artificial edges and join
    them through the two real crossing edges."""
    from .growth import open_cycle_at

    inv1 = {new: old for old, new in inst.relabel1.items()}
    inv2 = {new: old for old, new in inst.relabel2.items()}
    x1 = inst.cross1[0] if inst.cross1[0] in inst.relabel1 else inst.cross1[1]
    y1 = inst.cross1[0] if inst.cross1[0] in inst.relabel2 else inst.cross1[1]
    x2 = inst.cross2[0] if inst.cross2[0] in inst.relabel1 else inst.cross2[1]
    y2 = inst.cross2[0] if inst.cross2[0] in inst.relabel2 else inst.cross2[1]
    p1 = [inv1[v] for v in open_cycle_at(cycle1, inst.forced1)]
    p2 = [inv2[v] for v in open_cycle_at(cycle2, inst.forced2)]
    if p1[0] != x1:
        p1.reverse()
    if p2[0] != y2:
        p2.reverse()
    if p1[0] != x1 or p1[-1] != x2 or p2[0] != y2 or p2[-1] != y1:
        raise StructuralError("opened paths do not end at the crossing vertices")
    joined = tuple(p1 + p2)
    if not verify_hamilton_compatible(g, system, joined):
        raise StructuralError("stitched cycle failed verification")
    return joined


def almost_clique_hamilton(
    g: Graph,
    system: IncompatSystem,
    forced: Edge,
    profile: Optional[ThresholdProfile] = None,
    *,
    mu: float = DEFAULT_MU,
    tiers_enabled: tuple[bool, bool, bool] = (True, True, True),
) -> Optional[tuple[int, ...]]:
    """Hamilton cycle through the forced edge in a dense near-complete graph,
    or None. Rotations never break the forced edge; absorption avoids its
    endpoints; any output is re-verified."""
    forced = edge(*forced)
    if not g.has_edge(*forced):
        raise GraphError(f"forced edge {forced} is not in the graph")
    if g.n < 3:
        return None
    prof = profile if profile is not None else clique_profile(mu, forced)
    working = preprocess_correlated(g, system, mu, keep=frozenset({forced}))
    seed = PathState.from_seq(working, system, forced)
    avoid = frozenset(forced)
    cycle, _ = grow_compatible_hamilton(
        working,
        system,
        seed,
        prof,
        absorber=lambda cyc: absorb_outside_vertex(working, system, cyc, prof, avoid=avoid),
        tiers_enabled=tiers_enabled,
    )
    if cycle is None:
        return None
    if forced not in set(cycle_edges(cycle)):
        return None
    if not verify_hamilton_compatible(g, system, cycle):
        return None
    return cycle


@dataclass
class BipartiteInstance:
    """Balanced bipartite host with a perfect matching: side A is 0..m-1 and
    side B is m..2m-1, pair_map is the matching involution, `forced` lists the
    matching edges the Hamilton cycle must use, and `contracted` maps each
    forced edge back to the 2-path it replaced in the source graph."""

    graph: Graph
    system: IncompatSystem
    m: int
    pair_map: tuple[int, ...]
    forced: tuple[Edge, ...]
    x_a: frozenset[int]
    x_b: frozenset[int]
    orig_of: tuple[int, ...]
    contracted: dict[Edge, tuple[int, int, int]] = field(default_factory=dict)

    @property
    def side_a(self) -> frozenset[int]:
        return frozenset(range(self.m))

    @property
    def side_b(self) -> frozenset[int]:
        return frozenset(range(self.m, 2 * self.m))


def matched_conflict_filters(
    graph: Graph, system: IncompatSystem, pair_map: tuple[int, ...], m: int, mu: float
) -> tuple[frozenset[int], frozenset[int]]:
    """Vertices with at least sqrt(mu)*m matched-pair conflicts. Double
    counting pins |X_A| and |X_B| below sqrt(mu)*m whenever the system stays
    mu*m-bounded."""
    threshold = (mu ** 0.5) * m
    x_a, x_b = set(), set()
    pairs = [(a, pair_map[a]) for a in range(m)]
    for x in range(m):
        hits = sum(
            1
            for a, b in pairs
            if x != a and graph.has_edge(x, b) and system.is_incompatible(edge(x, b), edge(a, b))
        )
        if hits >= threshold:
            x_a.add(x)
    for y in range(m, 2 * m):
        hits = sum(
            1
            for a, b in pairs
            if y != b and graph.has_edge(a, y) and system.is_incompatible(edge(a, y), edge(a, b))
        )
        if hits >= threshold:
            x_b.add(y)
    if system.boundedness() <= mu * m:
        bound = (mu ** 0.5) * m
        if len(x_a) > bound or len(x_b) > bound:
            raise StructuralError("conflict filter exceeded its counting bound")
    return frozenset(x_a), frozenset(x_b)


def direct_bipartite_instance(
    g: Graph,
    system: IncompatSystem,
    matching: Iterable[Edge],
    forced_count: int,
    *,
    mu: float = DEFAULT_MU,
) -> BipartiteInstance:
    """Wrap an already-balanced bipartite graph (sides 0..m-1 and m..2m-1)
    with a perfect matching into an instance; the first `forced_count`
    matching edges become forced."""
    if g.n % 2:
        raise StructuralError("balanced bipartite instance needs an even vertex count")
    m = g.n // 2
    pairs = sorted(edge(*e) for e in matching)
    if len(pairs) != m:
        raise StructuralError("matching must be perfect")
    pair_map = [-1] * g.n
    for a, b in pairs:
        if not (a < m <= b) or not g.has_edge(a, b):
            raise StructuralError(f"matching edge ({a}, {b}) is not a crossing edge")
        pair_map[a], pair_map[b] = b, a
    if -1 in pair_map:
        raise StructuralError("matching does not cover every vertex")
    x_a, x_b = matched_conflict_filters(g, system, tuple(pair_map), m, mu)
    return BipartiteInstance(
        graph=g,
        system=system,
        m=m,
        pair_map=tuple(pair_map),
        forced=tuple(pairs[:forced_count]),
        x_a=x_a,
        x_b=x_b,
        orig_of=tuple(range(g.n)),
    )


def select_E0_and_matching(
    g: Graph,
    system: IncompatSystem,
    w: Iterable[int],
    wc: Iterable[int],
    *,
    mu: float = DEFAULT_MU,
) -> BipartiteInstance:
    """From a refined partition with |W| = (n+t)/2: pick t disjoint edges
    inside W, match the remaining W-half to the complement avoiding edges that
    conflict with the picked ones, contract each picked edge with its matched
    partner into a forced edge, and inherit its conflicts."""
    w_sorted = sorted(set(w))
    wc_sorted = sorted(set(wc))
    n = g.n
    if len(w_sorted) + len(wc_sorted) != n or set(w_sorted) & set(wc_sorted):
        raise StructuralError("inputs must partition the vertex set")
    t = len(w_sorted) - len(wc_sorted)
    if t < 0:
        raise StructuralError("the first part must be the larger one")
    wset = frozenset(w_sorted)
    chosen: list[Edge] = []
    used: set[int] = set()
    for e in g.edges():
        if len(chosen) == t:
            break
        if e[0] in wset and e[1] in wset and not (set(e) & used):
            chosen.append(e)
            used.update(e)
    if len(chosen) < t:
        raise StructuralError(f"only {len(chosen)} disjoint internal edges, need {t}")
    inner = {min(e): e for e in chosen}  # v_i = min endpoint stays in W1
    dropped = {max(e) for e in chosen}
    w1 = [v for v in w_sorted if v not in dropped]
    m = (n - t) // 2
    if len(w1) != m or len(wc_sorted) != m:
        raise StructuralError("partition sizes are inconsistent with t")
    adjacency: dict[int, list[int]] = {}
    for v in w1:
        partners = []
        inner_edge = inner.get(v)
        for u in g.neighbors(v):
            if u not in wset:
                if inner_edge is not None and system.is_incompatible(edge(v, u), inner_edge):
                    continue
                partners.append(u)
        adjacency[v] = partners
    match = maximum_bipartite_matching(adjacency)
    if len(match) < m:
        raise StructuralError("the filtered bipartite graph has no perfect matching")
    contracted_pairs: list[tuple[int, int, int]] = []  # (x_i, v_i, w_i)
    for e in chosen:
        v_i, x_i = min(e), max(e)
        contracted_pairs.append((x_i, v_i, match[v_i]))
    removed_mid = {v for _, v, _ in contracted_pairs}
    a_side = sorted(v for v in w_sorted if v not in removed_mid)
    b_side = wc_sorted
    if len(a_side) != m:
        raise StructuralError("contraction left an unbalanced side")
    relabel = {v: i for i, v in enumerate(a_side)}
    relabel.update({v: m + i for i, v in enumerate(b_side)})
    orig_of = tuple(a_side + b_side)
    contracted_new = {
        edge(relabel[x], relabel[wv]): (x, v, wv) for x, v, wv in contracted_pairs
    }
    h_edges = {
        edge(relabel[u], relabel[v])
        for u, v in g.edges()
        if ((u in relabel and v in relabel) and ((u in wset) != (v in wset))
            and u not in removed_mid and v not in removed_mid)
    }
    h_graph = Graph(2 * m, sorted(h_edges | set(contracted_new)))
    surviving = set(relabel)
    triples: list[tuple[int, int, int]] = []
    for v, a, b in system.triples():
        if v not in surviving or a not in surviving or b not in surviving:
            continue
        ea, eb = edge(v, a), edge(v, b)
        if (v in wset) == (a in wset) or (v in wset) == (b in wset):
            continue  # only crossing edges survive into the contracted host
        na, nb = edge(relabel[v], relabel[a]), edge(relabel[v], relabel[b])
        if na in contracted_new or nb in contracted_new:
            continue  # conflicts of a pre-existing contracted edge are redefined
        triples.append((relabel[v], relabel[a], relabel[b]))
    for x, v_mid, w_match in contracted_pairs:
        for y in g.neighbors(x):
            if y in wset or y == w_match:
                continue
            if system.is_incompatible(edge(x, v_mid), edge(x, y)):
                triples.append((relabel[x], relabel[w_match], relabel[y]))
        for u in g.neighbors(w_match):
            if u not in wset or u in removed_mid or u == x:
                continue
            if system.is_incompatible(edge(v_mid, w_match), edge(u, w_match)):
                triples.append((relabel[w_match], relabel[x], relabel[u]))
    h_system = IncompatSystem(h_graph, triples)
    if h_system.boundedness() > max(system.boundedness(), 0):
        raise StructuralError("contracted system exceeded the boundedness of its source")
    pair_map = [-1] * (2 * m)
    for v, partner in match.items():
        if v not in removed_mid:
            pair_map[relabel[v]] = relabel[partner]
            pair_map[relabel[partner]] = relabel[v]
    for e_new in contracted_new:
        a, b = e_new
        pair_map[a], pair_map[b] = b, a
    if -1 in pair_map:
        raise StructuralError("matching does not cover the contracted host")
    x_a, x_b = matched_conflict_filters(h_graph, h_system, tuple(pair_map), m, mu)
    return BipartiteInstance(
        graph=h_graph,
        system=h_system,
        m=m,
        pair_map=tuple(pair_map),
        forced=tuple(sorted(contracted_new)),
        x_a=x_a,
        x_b=x_b,
        orig_of=orig_of,
        contracted=contracted_new,
    )


def expand_contracted_cycle(inst: BipartiteInstance, cycle: tuple[int, ...]) -> tuple[int, ...]:
    """Map a Hamilton cycle of the contracted host back to the source graph,
    replacing each contracted edge by its 2-path."""
    out: list[int] = []
    length = len(cycle)
    for k in range(length):
        u, v = cycle[k], cycle[(k + 1) % length]
        out.append(inst.orig_of[u])
        mid = inst.contracted.get(edge(u, v))
        if mid is not None:
            out.append(mid[1])
    return tuple(out)


def is_proper(inst: BipartiteInstance, seq: tuple[int, ...]) -> bool:
    """Contains every forced edge and is closed under the matching."""
    vertices = set(seq)
    if any(inst.pair_map[v] not in vertices for v in vertices):
        return False
    edges_present = set(cycle_edges(seq)) if len(seq) >= 3 else set()
    if len(seq) == 2:
        edges_present = {edge(seq[0], seq[1])}
    return all(f in edges_present for f in inst.forced)


def _fresh_pairs(inst: BipartiteInstance, used: set[int]) -> list[tuple[int, int]]:
    return [
        (a, inst.pair_map[a])
        for a in range(inst.m)
        if a not in used and inst.pair_map[a] not in used
    ]


def _compatible_run(system: IncompatSystem, seq: list[int]) -> bool:
    for i in range(len(seq) - 2):
        if system.is_incompatible(edge(seq[i], seq[i + 1]), edge(seq[i + 1], seq[i + 2])):
            return False
    return True


def build_proper_seed_path(inst: BipartiteInstance) -> tuple[int, ...]:
    """Compatible matching-closed path through every forced edge, grown by
    ten-vertex splices one forced edge at a time."""
    g, system = inst.graph, inst.system
    if not inst.forced:
        a0 = 0
        return (a0, inst.pair_map[a0])
    path = list(inst.forced[0])
    for forced_edge in inst.forced[1:]:
        present = {edge(path[i], path[i + 1]) for i in range(len(path) - 1)}
        if forced_edge in present:
            continue
        path = _splice_forced(inst, path, forced_edge)
    return tuple(path)


def _splice_forced(inst: BipartiteInstance, path: list[int], target: Edge) -> list[int]:
    g, system = inst.graph, inst.system
    pm = inst.pair_map
    a_t, b_t = target
    used = set(path) | {a_t, b_t}
    b_end = path[-1]
    tail_edge = edge(path[-2], path[-1])
    ai_cands = [
        a
        for a in sorted(g.neighbors(b_end))
        if a < inst.m and a not in used and pm[a] not in used
        and system.is_compatible(edge(b_end, a), tail_edge)
    ]
    bj_cands = [
        b
        for b in sorted(g.neighbors(a_t))
        if b >= inst.m and b not in used and pm[b] not in used
        and system.is_compatible(edge(a_t, b), target)
    ]
    for a_i in ai_cands:
        b_i = pm[a_i]
        for b_j in bj_cands:
            a_j = pm[b_j]
            if a_j == a_i or not g.has_edge(b_i, a_j):
                continue
            blocked = used | {a_i, b_i, a_j, b_j}
            for a_k, b_k in _fresh_pairs(inst, blocked):
                if not (g.has_edge(a_i, b_k) and g.has_edge(a_k, b_i)):
                    continue
                left = [b_end, a_i, b_k, a_k, b_i, a_j]
                if not _compatible_run(system, left):
                    continue
                for a_l, b_l in _fresh_pairs(inst, blocked | {a_k, b_k}):
                    if not (g.has_edge(a_j, b_l) and g.has_edge(a_l, b_j)):
                        continue
                    right = [b_i, a_j, b_l, a_l, b_j, a_t, b_t]
                    if not _compatible_run(system, right):
                        continue
                    candidate = path + [a_i, b_k, a_k, b_i, a_j, b_l, a_l, b_j, a_t, b_t]
                    if _compatible_run(system, candidate[len(path) - 2:]):
                        return candidate
    raise SeedPathError(
        f"no ten-vertex splice reaches forced edge {target} from a path of "
        f"{len(path)} vertices"
    )


def upgrade_seed_to_smooth(
    inst: BipartiteInstance, path: tuple[int, ...], profile: ThresholdProfile
) -> tuple[int, ...]:
    """Extend both ends by matched pairs until the path is smooth under the
    profile; returns the original path when already smooth or when no
    eight-vertex extension works (the relaxation cascade then takes over)."""
    g, system = inst.graph, inst.system
    pm = inst.pair_map
    state = PathState.from_seq(g, system, path)
    if is_smooth(g, system, state, profile):
        return path
    a_end, b_end = path[0], path[-1]
    used = set(path)
    head_edge = edge(path[0], path[1])
    tail_edge = edge(path[-2], path[-1])
    for b_p in sorted(g.neighbors(a_end)):
        a_p = pm[b_p]
        if b_p in used or a_p in used or not system.is_compatible(edge(a_end, b_p), head_edge):
            continue
        for a_i, b_i in _fresh_pairs(inst, used | {a_p, b_p}):
            if not (g.has_edge(b_p, a_i) and g.has_edge(b_i, a_p)):
                continue
            front = [a_p, b_i, a_i, b_p, a_end]
            if not _compatible_run(system, front + [path[1]]):
                continue
            for a_pp in sorted(g.neighbors(b_end)):
                b_pp = pm[a_pp]
                if a_pp in used or b_pp in used or a_pp in (a_p, a_i) or b_pp in (b_p, b_i):
                    continue
                if not system.is_compatible(edge(b_end, a_pp), tail_edge):
                    continue
                for a_j, b_j in _fresh_pairs(inst, used | {a_p, b_p, a_i, b_i, a_pp, b_pp}):
                    if not (g.has_edge(a_pp, b_j) and g.has_edge(a_j, b_pp)):
                        continue
                    back = [path[-2], b_end, a_pp, b_j, a_j, b_pp]
                    if not _compatible_run(system, back):
                        continue
                    cand = tuple(front + list(path[1:]) + [a_pp, b_j, a_j, b_pp])
                    cand_state = PathState.from_seq(g, system, cand)
                    if is_smooth(g, system, cand_state, profile):
                        return cand
    return path


def almost_bipartite_hamilton(
    inst: BipartiteInstance,
    profile: Optional[ThresholdProfile] = None,
    *,
    mu: float = DEFAULT_MU,
    tiers_enabled: tuple[bool, bool, bool] = (True, True, True),
) -> Optional[tuple[int, ...]]:
    """Proper compatible Hamilton cycle of the contracted host, expanded back
    to the source graph's labels; None when the pipeline stalls."""
    g, system = inst.graph, inst.system
    if inst.m < 2:
        return None
    prof = profile if profile is not None else bipartite_profile(
        mu, inst.pair_map, frozenset(inst.forced), inst.x_a, inst.x_b
    )
    try:
        seed_seq = build_proper_seed_path(inst)
    except SeedPathError:
        return None
    seed_seq = upgrade_seed_to_smooth(inst, seed_seq, prof)
    seed = PathState.from_seq(g, system, seed_seq)
    avoid = frozenset(v for e in inst.forced for v in e)
    cycle, _ = grow_compatible_hamilton(
        g,
        system,
        seed,
        prof,
        absorber=lambda cyc: absorb_matched_pair(
            g, system, cyc, prof, inst.side_a, avoid=avoid
        ),
        tiers_enabled=tiers_enabled,
    )
    if cycle is None:
        return None
    if not verify_hamilton_compatible(g, system, cycle):
        return None
    if not is_proper(inst, cycle):
        return None
    return expand_contracted_cycle(inst, cycle)


def sparse_pair_candidates(g: Graph) -> list[SparsePairWitness]:
    """Deterministic local-search fallback for sparse-pair witnesses: a
    balanced min-cut-style pair (A, complement) and a sparse-side pair (S, S)
    found by minimizing internal edges."""
    n = g.n
    if n < 4:
        return []
    half = (n + 1) // 2

    def improve(count_fn, current: set[int]) -> set[int]:
        best_score = count_fn(current)
        improved = True
        while improved:
            improved = False
            outside = sorted(set(range(n)) - current)
            for a in sorted(current):
                for b in outside:
                    cand = (current - {a}) | {b}
                    score = count_fn(cand)
                    if score < best_score:
                        current, best_score, improved = cand, score, True
                        break
                if improved:
                    break
        return current

    ids = set(range(half))
    cut_side = improve(lambda s: edges_between(g, s, set(range(n)) - s), set(ids))
    sparse_side = improve(lambda s: edges_between(g, s, s), set(ids))
    out = [
        SparsePairWitness.from_sets(g, cut_side, set(range(n)) - cut_side),
        SparsePairWitness.from_sets(g, sparse_side, sparse_side),
    ]
    return out
