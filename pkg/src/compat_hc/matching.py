"""Maximum bipartite matching via Hopcroft-Karp layered augmentation.

Left and right vertices are arbitrary hashable ids; adjacency lists are
processed in sorted order so results are deterministic.
"""

from __future__ import annotations

from collections import deque

_INF = float("inf")


def maximum_bipartite_matching(adjacency: dict) -> dict:
    """Maximum matching of the bipartite graph given as left -> iterable of
    right neighbors. Returns the left -> right assignment."""
    graph = {u: sorted(vs) for u, vs in sorted(adjacency.items())}
    match_left: dict = {}
    match_right: dict = {}
    dist: dict = {}

    def bfs() -> bool:
        queue = deque()
        for u in graph:
            if u not in match_left:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in graph[u]:
                nxt = match_right.get(v)
                if nxt is None:
                    found = True
                elif dist[nxt] == _INF:
                    dist[nxt] = dist[u] + 1
                    queue.append(nxt)
        return found

    def dfs(u) -> bool:
        for v in graph[u]:
            nxt = match_right.get(v)
            if nxt is None or (dist[nxt] == dist[u] + 1 and dfs(nxt)):
                match_left[u] = v
                match_right[v] = u
                return True
        dist[u] = _INF
        return False

    while bfs():
        for u in graph:
            if u not in match_left:
                dfs(u)
    return dict(match_left)
