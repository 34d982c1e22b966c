"""Rotation engine over smooth compatible paths.

One engine serves three regimes (dense, almost-complete, almost-bipartite)
through a threshold profile: endpoint-goodness and correlation thresholds,
rotation depth, edges that rotations must never break, endpoint filter sets,
and an optional vertex pairing that switches extension to two-vertex steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .graphs import (
    Edge,
    Graph,
    GraphError,
    IncompatSystem,
    cycle_edges,
    edge,
    is_compatible_cycle,
    is_valid_path,
    path_edges,
)


class RotationError(GraphError):
    """Raised when a rotation or engine precondition is violated."""


# Desk-scale default: dyadic so threshold products stay exact in floats.
DEFAULT_MU = 1.0 / 16.0


@dataclass(frozen=True)
class ThresholdProfile:
    """Numeric knobs of the smooth-path machinery.

    good_frac: endpoint goodness bound as a fraction of |path|; None disables
        the clause.
    bad_scan_frac: threshold used when scanning for path-bad vertices in
        cycle-absorption steps.
    corr_frac: correlation threshold as a fraction of n.
    rotation_depth: rotation rounds allowed when closing; extensions may use
        one round less so the added-edge budget holds.
    forbidden_edges: edges no rotation or splice may break (forced edges).
    start_exclude / end_exclude: endpoint filter sets of the bipartite regime.
    pair_map: matching bijection; when set, extensions prepend (f(w), w).
    near_spanning_frac: slack below spanning at which absorption switches to
        the staged relaxation of flagged pairs.
    """

    good_frac: Optional[float] = None
    bad_scan_frac: float = 0.0
    corr_frac: float = 0.0
    rotation_depth: int = 3
    require_uncorrelated: bool = False
    forbidden_edges: frozenset[Edge] = frozenset()
    start_exclude: frozenset[int] = frozenset()
    end_exclude: frozenset[int] = frozenset()
    pair_map: Optional[tuple[int, ...]] = None
    near_spanning_frac: float = 0.0

    def __post_init__(self) -> None:
        if self.rotation_depth < 1:
            raise RotationError("rotation_depth must be at least 1")
        for name in ("bad_scan_frac", "corr_frac", "near_spanning_frac"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise RotationError(f"{name} must lie in [0, 1]")

    @property
    def extend_step(self) -> int:
        return 2 if self.pair_map is not None else 1

    def relaxation_tiers(self, enabled: tuple[bool, bool, bool] = (True, True, True)) -> list["ThresholdProfile"]:
        """Cascade: strict, then drop goodness, then drop correlation, then a
        plain compatible-rotation profile. Forbidden edges survive every tier."""
        tiers = [self]
        current = self
        if enabled[0] and current.good_frac is not None:
            current = replace(current, good_frac=None)
            tiers.append(current)
        if enabled[1] and current.require_uncorrelated:
            current = replace(current, require_uncorrelated=False)
            tiers.append(current)
        if enabled[2] and (current.start_exclude or current.end_exclude
                           or current.good_frac is not None or current.require_uncorrelated):
            current = replace(
                current,
                good_frac=None,
                require_uncorrelated=False,
                start_exclude=frozenset(),
                end_exclude=frozenset(),
            )
            tiers.append(current)
        return tiers


def dirac_profile(mu: float, *, rotation_depth: int = 3) -> ThresholdProfile:
    root = mu ** 0.5
    return ThresholdProfile(
        good_frac=8 * root,
        bad_scan_frac=min(2 * root, 1.0),
        corr_frac=min(root, 1.0),
        rotation_depth=rotation_depth,
        require_uncorrelated=True,
        near_spanning_frac=min(root, 1.0),
    )


def clique_profile(mu: float, forced: Edge, *, rotation_depth: int = 2) -> ThresholdProfile:
    root = mu ** 0.5
    return ThresholdProfile(
        good_frac=8 * root,
        bad_scan_frac=min(2 * root, 1.0),
        corr_frac=min(root, 1.0),
        rotation_depth=rotation_depth,
        require_uncorrelated=True,
        forbidden_edges=frozenset({forced}),
        near_spanning_frac=min(root, 1.0),
    )


def bipartite_profile(
    mu: float,
    pair_map: tuple[int, ...],
    forced: frozenset[Edge],
    x_a: frozenset[int],
    x_b: frozenset[int],
    *,
    rotation_depth: int = 2,
) -> ThresholdProfile:
    root = mu ** 0.5
    return ThresholdProfile(
        good_frac=8 * root,
        bad_scan_frac=min(2 * root, 1.0),
        corr_frac=min(root, 1.0),
        rotation_depth=rotation_depth,
        require_uncorrelated=False,
        forbidden_edges=forced,
        start_exclude=x_a,
        end_exclude=x_b,
        pair_map=pair_map,
        near_spanning_frac=min(2 * root, 1.0),
    )


def bad_neighbors(g: Graph, system: IncompatSystem, seq, w: int) -> set[int]:
    """Path vertices v adjacent to w whose edge to w conflicts with a path
    edge at v. w need not lie on the path; missing edges at the ends are
    skipped."""
    s = tuple(seq)
    if not is_valid_path(g, s):
        raise GraphError(f"not a valid path: {s}")
    return _bad_neighbors_unchecked(g, system, s, w)


def _bad_neighbors_unchecked(g: Graph, system: IncompatSystem, seq: tuple[int, ...], w: int) -> set[int]:
    out: set[int] = set()
    mask = g.adjacency_mask(w)
    last = len(seq) - 1
    for i, v in enumerate(seq):
        if v == w or not (mask >> v) & 1:
            continue
        wv = edge(w, v)
        if i > 0 and system.is_incompatible(wv, edge(seq[i - 1], v)):
            out.add(v)
            continue
        if i < last and system.is_incompatible(wv, edge(v, seq[i + 1])):
            out.add(v)
    return out


def _bad_count(g: Graph, system: IncompatSystem, seq: tuple[int, ...], w: int) -> int:
    return len(_bad_neighbors_unchecked(g, system, seq, w))


def is_gamma_good(g: Graph, system: IncompatSystem, seq, w: int, gamma: float) -> bool:
    """Fewer than gamma*|path| bad neighbors."""
    return len(bad_neighbors(g, system, seq, w)) < gamma * len(tuple(seq))


def correlated_count(g: Graph, system: IncompatSystem, v1: int, v2: int) -> int:
    """Common neighbors w of the host graph at which the edges {v1,w} and
    {v2,w} conflict. Intrinsic to the system: stored pairs witness the edges,
    so the count is stable under working-copy edge removals."""
    del g  # correlation lives on the system's host graph
    return system.correlated_count(v1, v2)


def is_uncorrelated(g: Graph, system: IncompatSystem, v1: int, v2: int, corr_frac: float) -> bool:
    return correlated_count(g, system, v1, v2) < corr_frac * g.n


@dataclass(frozen=True)
class PathState:
    """A compatible path with cached endpoint bad-neighbor counts."""

    seq: tuple[int, ...]
    bad_start: int
    bad_end: int

    @classmethod
    def from_seq(cls, g: Graph, system: IncompatSystem, seq) -> "PathState":
        s = tuple(seq)
        if not s:
            raise RotationError("empty path")
        bs = _bad_count(g, system, s, s[0])
        be = bs if len(s) == 1 else _bad_count(g, system, s, s[-1])
        return cls(s, bs, be)

    def __len__(self) -> int:
        return len(self.seq)


def is_smooth(g: Graph, system: IncompatSystem, p: PathState, profile: ThresholdProfile) -> bool:
    """Compatible path, both endpoints good, endpoints uncorrelated when the
    profile requires it, endpoints outside the filter sets."""
    seq = p.seq
    for i in range(len(seq) - 2):
        if system.is_incompatible(edge(seq[i], seq[i + 1]), edge(seq[i + 1], seq[i + 2])):
            return False
    if profile.good_frac is not None:
        limit = profile.good_frac * len(seq)
        if p.bad_start >= limit or p.bad_end >= limit:
            return False
    v0, vl = seq[0], seq[-1]
    if profile.start_exclude and v0 in profile.start_exclude:
        return False
    if profile.end_exclude and vl in profile.end_exclude:
        return False
    if profile.require_uncorrelated and v0 != vl:
        if correlated_count(g, system, v0, vl) >= profile.corr_frac * g.n:
            return False
    return True


def rotate(
    g: Graph,
    system: IncompatSystem,
    p: PathState,
    i: int,
    forbidden_edges: frozenset[Edge] = frozenset(),
) -> PathState:
    """Pivot at position i: reverse the prefix before the pivot, adding the
    edge {v0, vi} and breaking {v(i-1), vi}. Vertex set and length are
    preserved."""
    seq = p.seq
    last = len(seq) - 1
    if not 2 <= i <= last:
        raise RotationError(f"pivot index {i} out of range 2..{last}")
    if not g.has_edge(seq[0], seq[i]):
        raise RotationError(f"pivot {seq[i]} is not a neighbor of the free endpoint {seq[0]}")
    broken = edge(seq[i - 1], seq[i])
    if broken in forbidden_edges:
        raise RotationError(f"rotation would break forbidden edge {broken}")
    new_seq = tuple(reversed(seq[:i])) + seq[i:]
    return PathState.from_seq(g, system, new_seq)


def try_extend(
    g: Graph, system: IncompatSystem, p: PathState, profile: ThresholdProfile
) -> Optional[PathState]:
    """Smallest-id neighbor of the free endpoint outside the path that yields
    a smooth longer path; with a pair map the step prepends (f(w), w)."""
    seq = p.seq
    v0 = seq[0]
    in_path = set(seq)
    for w in g.neighbors(v0):
        if w in in_path:
            continue
        if profile.pair_map is not None:
            fw = profile.pair_map[w]
            if fw == w or fw in in_path or not g.has_edge(fw, w):
                continue
            cand = (fw, w) + seq
        else:
            cand = (w,) + seq
        q = PathState.from_seq(g, system, cand)
        if is_smooth(g, system, q, profile):
            return q
    return None


def _pivot_positions(
    g: Graph, system: IncompatSystem, p: PathState, profile: ThresholdProfile
) -> list[tuple[int, PathState]]:
    """All positions i >= 2 whose rotation yields a smooth path, with the
    rotated states. Candidates whose broken edge is forbidden, or whose new
    first pair conflicts locally, are filtered before the full check."""
    seq = p.seq
    last = len(seq) - 1
    if last < 2:
        return []
    v0 = seq[0]
    first_edge = edge(v0, seq[1])
    closing = edge(v0, seq[last]) if g.has_edge(v0, seq[last]) else None
    mask = g.adjacency_mask(v0)
    out: list[tuple[int, PathState]] = []
    for i in range(2, last + 1):
        vi = seq[i]
        if not (mask >> vi) & 1:
            continue
        if edge(seq[i - 1], vi) in profile.forbidden_edges:
            continue
        pivot_edge = edge(v0, vi)
        if system.is_incompatible(pivot_edge, first_edge):
            continue
        if i < last and system.is_incompatible(pivot_edge, edge(vi, seq[i + 1])):
            continue
        if closing is not None and i < last and system.is_incompatible(pivot_edge, closing):
            continue
        q = rotate(g, system, p, i, profile.forbidden_edges)
        if is_smooth(g, system, q, profile):
            out.append((i, q))
    return out


def pivot_set(
    g: Graph, system: IncompatSystem, p: PathState, profile: ThresholdProfile
) -> set[int]:
    """Pivot vertices whose rotation keeps the path smooth. Precondition: the
    path does not extend; every survivor is re-verified on the rotated path."""
    if try_extend(g, system, p, profile) is not None:
        raise RotationError("pivot_set requires an unextendable path")
    return {p.seq[i] for i, _ in _pivot_positions(g, system, p, profile)}


@dataclass
class AtlasEntry:
    state: PathState
    rounds: int
    added_edges: frozenset[Edge]


@dataclass
class EndpointAtlas:
    """Reachable free endpoints, each with a witness smooth path. The fixed
    endpoint never changes."""

    base: PathState
    entries: dict[int, AtlasEntry] = field(default_factory=dict)

    def endpoints(self) -> list[int]:
        return sorted(self.entries)


def reachable_endpoints(
    g: Graph, system: IncompatSystem, p: PathState, profile: ThresholdProfile
) -> EndpointAtlas:
    """Breadth-first closure of pivoting up to rotation_depth rounds, keyed by
    the resulting free endpoint."""
    atlas = EndpointAtlas(base=p)
    base_edges = set(path_edges(p.seq))
    atlas.entries[p.seq[0]] = AtlasEntry(p, 0, frozenset())
    frontier = [p]
    for depth in range(1, profile.rotation_depth + 1):
        new_frontier: list[PathState] = []
        for state in sorted(frontier, key=lambda s: s.seq[0]):
            for _, q in _pivot_positions(g, system, state, profile):
                endpoint = q.seq[0]
                if endpoint in atlas.entries:
                    continue
                added = frozenset(set(path_edges(q.seq)) - base_edges)
                atlas.entries[endpoint] = AtlasEntry(q, depth, added)
                new_frontier.append(q)
        if not new_frontier:
            break
        frontier = new_frontier
    return atlas


@dataclass(frozen=True)
class FailureWitness:
    """Byproduct of a failed close: predecessors of the last pivot set and the
    complement of the shifted reachable-endpoint set, for the structure
    pipeline."""

    set_a: frozenset[int]
    set_b: frozenset[int]
    endpoints: frozenset[int]
    path: tuple[int, ...]


@dataclass
class CloseResult:
    """Outcome of the extend-or-close loop.

    cycle is None on failure, in which case witness describes the stuck state.
    Counters cover the whole run against the original seed path.
    """

    cycle: Optional[tuple[int, ...]]
    path: PathState
    witness: Optional[FailureWitness]
    tier: int = 0
    rotations: int = 0
    extensions: int = 0
    new_vertices: int = 0
    added_edges: int = 0

    @property
    def closed(self) -> bool:
        return self.cycle is not None


def _budget_ok(profile: ThresholdProfile, added_edges: int, new_vertices: int) -> bool:
    # Per extension: depth-1 rotations plus step new edges for step new
    # vertices; the final close spends depth rotations plus the closing edge.
    step = profile.extend_step
    depth = profile.rotation_depth
    return step * added_edges <= (depth - 1 + step) * new_vertices + step * (depth + 1)


def _close_once(
    g: Graph, system: IncompatSystem, start: PathState, profile: ThresholdProfile
) -> CloseResult:
    state = start
    rotations = 0
    extensions = 0
    extend_depth = profile.rotation_depth - 1
    while True:
        atlas = EndpointAtlas(base=state)
        atlas.entries[state.seq[0]] = AtlasEntry(state, 0, frozenset())
        frontier = [state]
        extended: Optional[tuple[PathState, int]] = None
        for depth in range(profile.rotation_depth + 1):
            if depth <= extend_depth:
                for cand in sorted(frontier, key=lambda s: s.seq[0]):
                    ext = try_extend(g, system, cand, profile)
                    if ext is not None:
                        extended = (ext, depth)
                        break
            if extended is not None or depth == profile.rotation_depth:
                break
            new_frontier: list[PathState] = []
            for cand in sorted(frontier, key=lambda s: s.seq[0]):
                for _, q in _pivot_positions(g, system, cand, profile):
                    endpoint = q.seq[0]
                    if endpoint in atlas.entries:
                        continue
                    atlas.entries[endpoint] = AtlasEntry(q, depth + 1, frozenset())
                    new_frontier.append(q)
            if not new_frontier:
                break
            frontier = new_frontier
        if extended is not None:
            state, used = extended
            rotations += used
            extensions += 1
            continue
        # No extension anywhere: search the atlas for a compatible closing edge.
        fixed = state.seq[-1]
        for endpoint in atlas.endpoints():
            entry = atlas.entries[endpoint]
            seq = entry.state.seq
            if len(seq) < 3 or not g.has_edge(endpoint, fixed):
                continue
            closing = edge(endpoint, fixed)
            if system.is_incompatible(closing, edge(seq[0], seq[1])):
                continue
            if system.is_incompatible(closing, edge(seq[-2], seq[-1])):
                continue
            if not is_compatible_cycle(g, system, seq):
                continue
            rotations += entry.rounds
            return CloseResult(
                cycle=seq,
                path=entry.state,
                witness=None,
                rotations=rotations,
                extensions=extensions,
            )
        witness = _witness_from(g, system, state, atlas, profile)
        return CloseResult(
            cycle=None,
            path=state,
            witness=witness,
            rotations=rotations,
            extensions=extensions,
        )


def _witness_from(
    g: Graph,
    system: IncompatSystem,
    state: PathState,
    atlas: EndpointAtlas,
    profile: ThresholdProfile,
) -> FailureWitness:
    seq = state.seq
    pos = {v: i for i, v in enumerate(seq)}
    pivots = {seq[i] for i, _ in _pivot_positions(g, system, state, profile)}
    set_a = frozenset(seq[pos[v] - 1] for v in pivots if pos[v] >= 1)
    reach = frozenset(atlas.entries)
    shifted: set[int] = set()
    for v in reach:
        i = pos.get(v)
        if i is None:
            continue
        if i >= 1:
            shifted.add(seq[i - 1])
        if i + 1 < len(seq):
            shifted.add(seq[i + 1])
    set_b = frozenset(range(g.n)) - shifted
    return FailureWitness(set_a=set_a, set_b=set_b, endpoints=reach, path=seq)


def extend_or_close(
    g: Graph,
    system: IncompatSystem,
    p: PathState,
    profile: ThresholdProfile,
    tiers_enabled: tuple[bool, bool, bool] = (True, True, True),
) -> CloseResult:
    """Repeatedly extend the path within the rotation budget; once stuck,
    close it into a compatible cycle through a reachable endpoint.

    Runs the relaxation cascade: each tier drops one smoothness clause, and
    any cycle found is re-verified for compatibility regardless of the tier
    that produced it. On exhaustion the strict tier's failure witness is
    returned."""
    strict_fail: Optional[CloseResult] = None
    for tier_idx, prof in enumerate(profile.relaxation_tiers(tiers_enabled)):
        if not is_smooth(g, system, p, prof):
            continue
        result = _close_once(g, system, p, prof)
        if result.closed:
            base_v = set(p.seq)
            base_e = set(path_edges(p.seq))
            cyc = result.cycle
            new_vertices = len(set(cyc) - base_v)
            added = len(set(cycle_edges(cyc)) - base_e)
            if not _budget_ok(prof, added, new_vertices):
                raise RotationError(
                    f"close exceeded the edge budget: {added} new edges for {new_vertices} new vertices"
                )
            result.tier = tier_idx
            result.new_vertices = new_vertices
            result.added_edges = added
            return result
        if strict_fail is None:
            result.tier = tier_idx
            strict_fail = result
    if strict_fail is None:
        # Seed was not smooth under any tier (an incompatible seed): report
        # an empty-atlas failure on the seed itself.
        strict_fail = CloseResult(
            cycle=None,
            path=p,
            witness=FailureWitness(frozenset(), frozenset(range(g.n)), frozenset({p.seq[0]}), p.seq),
        )
    return strict_fail
