"""Exhaustive ground truth for small instances.

Backtracking over vertex sequences anchored at vertex 0 with a canonical
direction (second vertex smaller than last) so each undirected Hamilton cycle
is visited once. Pruning is adjacency-based plus an incremental pair
compatibility check, and stays sound for exact counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Optional

from .graphs import Graph, IncompatSystem, edge, is_compatible_cycle


@dataclass
class OracleResult:
    found: bool
    cycle: Optional[tuple[int, ...]]
    count: Optional[int]
    nodes_explored: int


def _feasible(g: Graph, head: int, unused_mask: int) -> bool:
    # Every unvisited vertex still needs two usable cycle slots, and the
    # remainder must be reachable from the current head without re-entering
    # visited vertices (vertex 0 only closes the cycle).
    avail = unused_mask | (1 << head) | 1
    mask = unused_mask
    while mask:
        low = mask & -mask
        v = low.bit_length() - 1
        mask ^= low
        if (g.adjacency_mask(v) & avail).bit_count() < 2:
            return False
    # connectivity sweep over unused + head
    region = unused_mask | (1 << head)
    seen = 1 << head
    frontier = 1 << head
    while frontier:
        reach = 0
        m = frontier
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            reach |= g.adjacency_mask(v) & region
        frontier = reach & ~seen
        seen |= frontier
    return seen & unused_mask == unused_mask


def exhaustive_compatible_hamilton(
    g: Graph, system: IncompatSystem, count_all: bool = False
) -> OracleResult:
    """First compatible Hamilton cycle, or the exact count of them."""
    n = g.n
    if n < 3:
        return OracleResult(False, None, 0 if count_all else None, 0)
    nodes = 0
    count = 0
    first: Optional[tuple[int, ...]] = None
    seq = [0] * n
    anchor_mask = g.adjacency_mask(0)

    def recurse(depth: int, head: int, prev_edge, used: int) -> bool:
        nonlocal nodes, count, first
        nodes += 1
        if depth == n:
            if not (anchor_mask >> head) & 1 or seq[1] > seq[-1]:
                return False
            closing = edge(head, 0)
            if system.is_incompatible(prev_edge, closing):
                return False
            if system.is_incompatible(closing, edge(0, seq[1])):
                return False
            count += 1
            if first is None:
                first = tuple(seq)
            return not count_all
        unused = ~used & ((1 << n) - 1)
        if depth <= n - 2 and not _feasible(g, head, unused):
            return False
        mask = g.adjacency_mask(head) & unused
        while mask:
            low = mask & -mask
            w = low.bit_length() - 1
            mask ^= low
            step = edge(head, w)
            if prev_edge is not None and system.is_incompatible(prev_edge, step):
                continue
            seq[depth] = w
            if recurse(depth + 1, w, step, used | low):
                return True
        return False

    recurse(1, 0, None, 1)
    found = count > 0
    return OracleResult(found, first, count if count_all else None, nodes)


def reference_hamilton_count(g: Graph, system: IncompatSystem) -> int:
    """Unpruned reference: scan every anchored permutation. Exponential; meant
    for cross-checking the backtracker on n <= 8."""
    n = g.n
    if n < 3:
        return 0
    count = 0
    for rest in permutations(range(1, n)):
        if rest[0] > rest[-1]:
            continue
        seq = (0,) + rest
        if all(g.has_edge(seq[i], seq[i + 1]) for i in range(n - 1)) and g.has_edge(seq[-1], 0):
            if is_compatible_cycle(g, system, seq):
                count += 1
    return count


def naive_directed_count(g: Graph, system: IncompatSystem) -> int:
    """Anchored count without the direction canonicalization; exactly twice
    the canonical count for n >= 3."""
    n = g.n
    if n < 3:
        return 0
    count = 0
    for rest in permutations(range(1, n)):
        seq = (0,) + rest
        if all(g.has_edge(seq[i], seq[i + 1]) for i in range(n - 1)) and g.has_edge(seq[-1], 0):
            if is_compatible_cycle(g, system, seq):
                count += 1
    return count


def max_compatible_cycle_len(g: Graph, system: IncompatSystem) -> int:
    """Exact maximum length over all compatible cycles; 0 when acyclic or
    fully blocked. Searches lengths downward and stops at the first hit."""
    n = g.n
    for target in range(n, 2, -1):
        if _find_cycle_of_length(g, system, target):
            return target
    return 0


def _find_cycle_of_length(g: Graph, system: IncompatSystem, target: int) -> bool:
    n = g.n
    seq = [0] * target

    def recurse(depth: int, head: int, prev_edge, used: int, start: int) -> bool:
        if depth == target:
            if not g.has_edge(head, start) or seq[1] > seq[-1]:
                return False
            closing = edge(head, start)
            return not (
                system.is_incompatible(prev_edge, closing)
                or system.is_incompatible(closing, edge(start, seq[1]))
            )
        mask = g.adjacency_mask(head) & ~used
        mask &= ~((1 << (start + 1)) - 1)  # only vertices above the anchor
        while mask:
            low = mask & -mask
            w = low.bit_length() - 1
            mask ^= low
            step = edge(head, w)
            if prev_edge is not None and system.is_incompatible(prev_edge, step):
                continue
            seq[depth] = w
            if recurse(depth + 1, w, step, used | low, start):
                return True
        return False

    for start in range(n - target + 1):
        seq[0] = start
        if recurse(1, start, None, 1 << start, start):
            return True
    return False
