"""Growing a compatible cycle to spanning: absorb an outside vertex (or a
matched pair) through a splice, then repair the at-most-two flagged edge
pairs by a staged relaxation that re-closes under successively stricter
systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .graphs import (
    Edge,
    Graph,
    GraphError,
    IncompatSystem,
    cycle_edges,
    edge,
    is_compatible_cycle,
)
from .rotation import (
    CloseResult,
    PathState,
    ThresholdProfile,
    _bad_count,
    correlated_count,
    extend_or_close,
)


class AbsorbError(GraphError):
    """Raised when no valid splice exists for the chosen outside vertex."""


def preprocess_correlated(
    g: Graph, system: IncompatSystem, mu: float, keep: frozenset[Edge] = frozenset()
) -> Graph:
    """Remove every edge whose endpoints share at least sqrt(mu)*n conflicting
    common neighbors; edges in `keep` survive. When the system stays within
    the mu*n bound, no vertex loses more than sqrt(mu)*n edges."""
    threshold = (mu ** 0.5) * g.n
    removed = [
        e
        for e in g.edges()
        if e not in keep and system.correlated_count(e[0], e[1]) >= threshold
    ]
    reduced = g.without_edges(removed)
    if system.boundedness() <= mu * g.n:
        for v in range(g.n):
            loss = g.degree(v) - reduced.degree(v)
            if loss > threshold:
                raise GraphError(
                    f"correlated-edge removal stripped {loss} edges at vertex {v}, "
                    f"above the {threshold} ceiling"
                )
    return reduced


@dataclass
class Splice:
    """A candidate absorption: the spliced open path and the boundary pairs
    (cycle-side carrier edge, new edge) that are incompatible and need the
    staged repair. Flagged pairs are ordered; the repair restores them in
    order."""

    path: tuple[int, ...]
    flagged: list[tuple[Edge, Edge]]
    inserted: tuple[int, ...]


def _splice_seq(cycle: tuple[int, ...], i: int, j: int, mids: tuple[int, ...]) -> tuple[int, ...]:
    # Remove the cycle edges after positions i and j, walk forward from i+1 to
    # j, insert the new vertices, then walk backward from i to j+1.
    length = len(cycle)
    fwd = [cycle[(i + 1 + k) % length] for k in range((j - i - 1) % length + 1)]
    bwd = [cycle[(i - k) % length] for k in range((i - j - 1) % length + 1)]
    return tuple(fwd) + mids + tuple(bwd)


def _bad_for_cycle(g: Graph, system: IncompatSystem, cycle: tuple[int, ...], w: int) -> int:
    count = 0
    mask = g.adjacency_mask(w)
    length = len(cycle)
    for i, v in enumerate(cycle):
        if v == w or not (mask >> v) & 1:
            continue
        wv = edge(w, v)
        if system.is_incompatible(wv, edge(cycle[i - 1], v)) or system.is_incompatible(
            wv, edge(v, cycle[(i + 1) % length])
        ):
            count += 1
    return count


def _cycle_bad_set(
    g: Graph, system: IncompatSystem, cycle: tuple[int, ...], frac: float
) -> set[int]:
    limit = frac * len(cycle)
    return {
        w
        for w in range(g.n)
        if _bad_for_cycle(g, system, cycle, w) >= limit
    }


def absorb_outside_vertex(
    g: Graph,
    system: IncompatSystem,
    cycle: tuple[int, ...],
    profile: ThresholdProfile,
    avoid: frozenset[int] = frozenset(),
) -> Splice:
    """Splice one outside vertex z into the cycle between two of its cycle
    neighbors, preferring a fully compatible splice and otherwise flagging the
    at most two boundary pairs for the staged repair.

    `avoid` lists vertices (endpoints of forced edges) that may not serve as
    splice points."""
    n = g.n
    in_cycle = set(cycle)
    outside = sorted(v for v in range(n) if v not in in_cycle)
    if not outside:
        raise AbsorbError("cycle already spans all vertices")
    bad_set = _cycle_bad_set(g, system, cycle, profile.bad_scan_frac)
    near_spanning = len(cycle) >= (1.0 - profile.near_spanning_frac) * n
    z = None
    z_bad: set[int] = set()
    if not near_spanning:
        for cand in outside:
            if cand not in bad_set:
                z = cand
                z_bad = {
                    v
                    for i, v in enumerate(cycle)
                    if g.has_edge(cand, v)
                    and (
                        system.is_incompatible(edge(cand, v), edge(cycle[i - 1], v))
                        or system.is_incompatible(edge(cand, v), edge(v, cycle[(i + 1) % len(cycle)]))
                    )
                }
                break
    if z is None:
        z = outside[0]
    positions = {v: i for i, v in enumerate(cycle)}
    length = len(cycle)
    anchors = [
        v
        for v in cycle
        if g.has_edge(z, v)
        and v not in bad_set
        and v not in z_bad
        and v not in avoid
        and cycle[positions[v] - 1] not in bad_set
        and cycle[(positions[v] + 1) % length] not in bad_set
    ]
    if len(anchors) < 2:
        raise AbsorbError(f"too few splice anchors for vertex {z}")
    best: Optional[Splice] = None
    for vi in sorted(anchors):
        i = positions[vi]
        succ_i = cycle[(i + 1) % length]
        pred_i = cycle[i - 1]
        e_zi = edge(z, vi)
        for vj in sorted(anchors):
            if vj in (vi, succ_i, pred_i):
                continue
            if system.is_incompatible(e_zi, edge(z, vj)):
                continue
            j = positions[vj]
            succ_j = cycle[(j + 1) % length]
            if profile.require_uncorrelated and correlated_count(
                g, system, succ_i, succ_j
            ) >= profile.corr_frac * n:
                continue
            if edge(vi, succ_i) in profile.forbidden_edges or edge(vj, succ_j) in profile.forbidden_edges:
                continue
            pred_j = cycle[j - 1]
            flagged: list[tuple[Edge, Edge]] = []
            carrier_j = edge(pred_j, vj)
            if system.is_incompatible(carrier_j, edge(vj, z)):
                flagged.append((carrier_j, edge(vj, z)))
            carrier_i = edge(vi, pred_i)
            if system.is_incompatible(edge(z, vi), carrier_i):
                flagged.append((carrier_i, edge(z, vi)))
            cand = Splice(
                path=_splice_seq(cycle, i, j, (z,)),
                flagged=flagged,
                inserted=(z,),
            )
            if not flagged:
                return cand
            if best is None:
                best = cand
    if best is None:
        raise AbsorbError(f"no splice pair for vertex {z}")
    return best


def absorb_matched_pair(
    g: Graph,
    system: IncompatSystem,
    cycle: tuple[int, ...],
    profile: ThresholdProfile,
    side_a: frozenset[int],
    avoid: frozenset[int] = frozenset(),
) -> Splice:
    """Bipartite variant: splice a whole matched pair (a, b) outside the cycle
    between a cycle neighbor of a and one of b. Filter sets of the profile
    exclude splice points whose shifted neighbors would leave the smooth
    class."""
    pair_map = profile.pair_map
    if pair_map is None:
        raise AbsorbError("absorb_matched_pair requires a pair map")
    in_cycle = set(cycle)
    missing = sorted(v for v in side_a if v not in in_cycle)
    if not missing:
        raise AbsorbError("cycle already spans all matched pairs")
    bad_set = _cycle_bad_set(g, system, cycle, profile.bad_scan_frac)
    near_spanning = len(cycle) >= (1.0 - profile.near_spanning_frac) * g.n
    a = None
    if not near_spanning:
        for cand in missing:
            if cand not in bad_set and pair_map[cand] not in bad_set:
                a = cand
                break
    if a is None:
        a = missing[0]
    b = pair_map[a]
    if b in in_cycle:
        raise AbsorbError("matching pair is split across the cycle boundary")
    bad_a = {
        v
        for i, v in enumerate(cycle)
        if g.has_edge(a, v)
        and (
            system.is_incompatible(edge(a, v), edge(cycle[i - 1], v))
            or system.is_incompatible(edge(a, v), edge(v, cycle[(i + 1) % len(cycle)]))
        )
    } if not near_spanning else set()
    bad_b = {
        v
        for i, v in enumerate(cycle)
        if g.has_edge(b, v)
        and (
            system.is_incompatible(edge(b, v), edge(cycle[i - 1], v))
            or system.is_incompatible(edge(b, v), edge(v, cycle[(i + 1) % len(cycle)]))
        )
    } if not near_spanning else set()
    positions = {v: i for i, v in enumerate(cycle)}
    length = len(cycle)

    def anchors_for(z: int, z_bad: set[int], own_filter: frozenset[int], other_filter: frozenset[int]) -> list[int]:
        out = []
        for v in cycle:
            if not g.has_edge(z, v) or v in z_bad or v in bad_set or v in avoid:
                continue
            if v in other_filter:
                continue
            i = positions[v]
            prev_v, next_v = cycle[i - 1], cycle[(i + 1) % length]
            if prev_v in bad_set or next_v in bad_set:
                continue
            if prev_v in own_filter or next_v in own_filter:
                continue
            out.append(v)
        return sorted(out)

    t_a = anchors_for(a, bad_a, profile.start_exclude, profile.end_exclude)
    t_b = anchors_for(b, bad_b, profile.end_exclude, profile.start_exclude)
    e_ab = edge(a, b)
    best: Optional[Splice] = None
    for vi in t_a:
        if system.is_incompatible(edge(a, vi), e_ab):
            continue
        i = positions[vi]
        succ_i, pred_i = cycle[(i + 1) % length], cycle[i - 1]
        for vj in t_b:
            if vj in (succ_i, pred_i):
                continue
            if system.is_incompatible(e_ab, edge(b, vj)):
                continue
            j = positions[vj]
            succ_j = cycle[(j + 1) % length]
            if edge(vi, succ_i) in profile.forbidden_edges or edge(vj, succ_j) in profile.forbidden_edges:
                continue
            pred_j = cycle[j - 1]
            flagged: list[tuple[Edge, Edge]] = []
            carrier_j = edge(pred_j, vj)
            if system.is_incompatible(carrier_j, edge(vj, b)):
                flagged.append((carrier_j, edge(vj, b)))
            carrier_i = edge(vi, pred_i)
            if system.is_incompatible(edge(a, vi), carrier_i):
                flagged.append((carrier_i, edge(a, vi)))
            cand = Splice(
                path=_splice_seq(cycle, i, j, (b, a)),
                flagged=flagged,
                inserted=(a, b),
            )
            if not flagged:
                return cand
            if best is None:
                best = cand
    if best is None:
        raise AbsorbError(f"no splice pair for matched pair ({a}, {b})")
    return best


def open_cycle_at(cycle: tuple[int, ...], e: Edge) -> tuple[int, ...]:
    """The path obtained by removing edge e from the cycle."""
    length = len(cycle)
    for k in range(length):
        if edge(cycle[k], cycle[(k + 1) % length]) == e:
            return tuple(cycle[(k + 1 + idx) % length] for idx in range(length))
    raise GraphError(f"edge {e} is not on the cycle")


def staged_repair(
    g: Graph,
    system: IncompatSystem,
    splice: Splice,
    profile: ThresholdProfile,
    tiers_enabled: tuple[bool, bool, bool] = (True, True, True),
) -> Optional[tuple[int, ...]]:
    """Close the spliced path under the system with the flagged pairs relaxed,
    then restore the pairs one at a time: open the cycle at the restored
    pair's carrier edge (when present) and re-close under the stricter
    system. The final cycle is compatible with the original system."""
    relaxed = system.without_pairs(g, splice.flagged)
    state = PathState.from_seq(g, relaxed, splice.path)
    result = extend_or_close(g, relaxed, state, profile, tiers_enabled)
    if not result.closed:
        return None
    current = result.cycle
    for k in range(len(splice.flagged)):
        stricter = system.without_pairs(g, splice.flagged[k + 1:])
        carrier = splice.flagged[k][0]
        if carrier in set(cycle_edges(current)):
            opened = open_cycle_at(current, carrier)
            state = PathState.from_seq(g, stricter, opened)
            result = extend_or_close(g, stricter, state, profile, tiers_enabled)
            if not result.closed:
                return None
            current = result.cycle
    if not is_compatible_cycle(g, system, current):
        return None
    return current


@dataclass
class GrowthTrace:
    closes: int = 0
    absorptions: int = 0
    repairs: int = 0
    rotations: int = 0
    relaxation_tier: int = 0
    failure: Optional[str] = None
    witness: Optional[object] = None


def grow_compatible_hamilton(
    g: Graph,
    system: IncompatSystem,
    seed: PathState,
    profile: ThresholdProfile,
    *,
    target: Optional[int] = None,
    absorber: Optional[Callable[[tuple[int, ...]], Splice]] = None,
    tiers_enabled: tuple[bool, bool, bool] = (True, True, True),
) -> tuple[Optional[tuple[int, ...]], GrowthTrace]:
    """Extend-or-close from the seed, then repeatedly absorb outside vertices
    until the cycle reaches `target` vertices. Every iteration must strictly
    grow the cycle; the first stall ends the run with the failure recorded."""
    size_goal = g.n if target is None else target
    trace = GrowthTrace()
    if absorber is None:
        absorber = lambda cyc: absorb_outside_vertex(g, system, cyc, profile)
    result = extend_or_close(g, system, seed, profile, tiers_enabled)
    trace.rotations += result.rotations
    trace.relaxation_tier = max(trace.relaxation_tier, result.tier)
    if not result.closed:
        trace.failure = "initial-close"
        trace.witness = result.witness
        return None, trace
    trace.closes += 1
    cycle = result.cycle
    while len(cycle) < size_goal:
        try:
            splice = absorber(cycle)
        except AbsorbError as exc:
            trace.failure = f"absorb: {exc}"
            return None, trace
        trace.absorptions += 1
        if splice.flagged:
            trace.repairs += 1
            grown = staged_repair(g, system, splice, profile, tiers_enabled)
        else:
            state = PathState.from_seq(g, system, splice.path)
            result = extend_or_close(g, system, state, profile, tiers_enabled)
            trace.rotations += result.rotations
            trace.relaxation_tier = max(trace.relaxation_tier, result.tier)
            grown = result.cycle if result.closed else None
        if grown is None or len(grown) <= len(cycle):
            trace.failure = "absorb-close-stalled"
            return None, trace
        trace.closes += 1
        cycle = grown
    return cycle, trace
