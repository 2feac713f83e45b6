"""Structural features of a parsed query via its join graph.

The join graph has one node per triple pattern and an undirected edge
between two patterns iff they share at least one variable (shared constants
do not join).  Shape labels are decided in strict priority order:

1. Disconnected — more than one connected component;
2. Cycle        — some component contains a cycle;
3. Point        — exactly one pattern;
4. Chain        — all degrees <= 2 with exactly two degree-1 endpoints;
5. Star         — one hub of degree n-1 >= 2, every other node degree 1;
6. Tree         — anything else.

Depth is the number of edges on the longest simple path within the largest
component.  A query with no patterns degenerates to (Point, depth 0).
"""
from __future__ import annotations

from collections import deque

from ..model import ParsedQuery, QueryFeatures, QueryShape


def join_edges(pattern_vars: list[frozenset[str]]) -> list[tuple[int, int]]:
    """Edges of the join graph over pattern indices."""
    edges: list[tuple[int, int]] = []
    n = len(pattern_vars)
    for i in range(n):
        if not pattern_vars[i]:
            continue
        for j in range(i + 1, n):
            if pattern_vars[i] & pattern_vars[j]:
                edges.append((i, j))
    return edges


def _components(n: int, adj: list[list[int]]) -> list[list[int]]:
    seen = [False] * n
    out: list[list[int]] = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nb in adj[node]:
                if not seen[nb]:
                    seen[nb] = True
                    comp.append(nb)
                    queue.append(nb)
        out.append(comp)
    return out


def _bfs_farthest(start: int, adj: list[list[int]]) -> tuple[int, int]:
    dist = {start: 0}
    queue = deque([start])
    far, far_d = start, 0
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if nb not in dist:
                dist[nb] = dist[node] + 1
                if dist[nb] > far_d:
                    far, far_d = nb, dist[nb]
                queue.append(nb)
    return far, far_d


def _longest_simple_path(comp: list[int], adj: list[list[int]]) -> int:
    """Longest simple path (in edges) within one connected component."""
    comp_set = set(comp)
    edge_count = sum(len([nb for nb in adj[v] if nb in comp_set]) for v in comp) // 2
    if edge_count == len(comp) - 1:
        # a tree: the diameter, found by the classic double sweep
        far, _ = _bfs_farthest(comp[0], adj)
        _, depth = _bfs_farthest(far, adj)
        return depth
    if len(comp) > 16:
        # cyclic and large: fall back to the double sweep lower bound
        # (pattern blocks this big do not occur in endpoint logs)
        far, _ = _bfs_farthest(comp[0], adj)
        _, depth = _bfs_farthest(far, adj)
        return depth

    best = 0

    def dfs(node: int, visited: set[int], length: int) -> None:
        nonlocal best
        if length > best:
            best = length
        for nb in adj[node]:
            if nb in comp_set and nb not in visited:
                visited.add(nb)
                dfs(nb, visited, length + 1)
                visited.discard(nb)

    for start in comp:
        dfs(start, {start}, 0)
    return best


def classify_join_graph(
    pattern_vars: list[frozenset[str]],
) -> tuple[QueryShape, int]:
    """(shape, depth) per the decision table above."""
    n = len(pattern_vars)
    if n == 0:
        return QueryShape.POINT, 0
    edges = join_edges(pattern_vars)
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    comps = _components(n, adj)
    largest = max(comps, key=len)
    largest_size = len(largest)
    depth = max(
        (_longest_simple_path(c, adj) for c in comps if len(c) == largest_size),
        default=0,
    )
    if len(comps) > 1:
        return QueryShape.DISCONNECTED, depth
    if len(edges) >= n:  # one component: more edges than a spanning tree
        return QueryShape.CYCLE, depth
    if n == 1:
        return QueryShape.POINT, 0
    degrees = [len(adj[v]) for v in range(n)]
    if max(degrees) <= 2 and degrees.count(1) == 2:
        return QueryShape.CHAIN, depth
    if max(degrees) == n - 1 and n - 1 >= 2 and degrees.count(1) == n - 1:
        return QueryShape.STAR, depth
    return QueryShape.TREE, depth


def extract_features(query: ParsedQuery) -> QueryFeatures:
    pattern_vars = [p.variables() for p in query.triple_patterns]
    shape, depth = classify_join_graph(pattern_vars)
    return QueryFeatures(
        pattern_count=len(query.triple_patterns),
        shape=shape,
        depth=depth,
        has_aggregate=bool(query.aggregates),
        has_group_by=query.group_by,
        distinct=query.distinct,
        variable_count=len(query.variables()),
    )
