"""Smallest set of smallest rings.

Candidate cycles follow Horton: for every root vertex and every edge, join
the two BFS shortest paths from the root with the edge.  Candidates are
sorted by (size, sorted atom indices) and kept greedily while they stay
linearly independent over GF(2), until the cyclomatic number is reached.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

from polymm.chem.graph import MolecularGraph


def find_sssr(graph: MolecularGraph) -> list[tuple[int, ...]]:
    """Return the SSSR of ``graph`` as atom cycles, smallest first."""
    edges = [(b.begin, b.end) for b in graph.bonds]
    return sssr_from_edges(len(graph.atoms), edges)


def sssr_from_edges(n_atoms: int, edges: Sequence[tuple[int, int]]) -> list[tuple[int, ...]]:
    adj: list[list[int]] = [[] for _ in range(n_atoms)]
    edge_id: dict[tuple[int, int], int] = {}
    for i, (a, b) in enumerate(edges):
        adj[a].append(b)
        adj[b].append(a)
        edge_id[(a, b)] = i
        edge_id[(b, a)] = i
    for nbrs in adj:
        nbrs.sort()

    n_components = _count_components(adj)
    target = len(edges) - n_atoms + n_components
    if target <= 0:
        return []

    # only ring bonds can take part in cycles; prune trees hanging off them
    core = _two_core(adj)

    candidates: dict[int, tuple[int, ...]] = {}
    for root in sorted(core):
        parent, dist = _bfs_tree(adj, root, core)
        for a, b in edges:
            if a not in core or b not in core or a not in dist or b not in dist:
                continue
            if parent.get(a) == b or parent.get(b) == a:
                continue
            pa = _path_to_root(parent, a)
            pb = _path_to_root(parent, b)
            if set(pa[:-1]) & set(pb[:-1]):
                continue
            # pa, pb both end at root
            cycle = tuple(pa + list(reversed(pb[:-1])))
            if len(set(cycle)) != len(cycle) or len(cycle) < 3:
                continue
            mask = _edge_mask(cycle, edge_id)
            if mask not in candidates:
                candidates[mask] = cycle

    # spanning-tree fundamental cycles guarantee completeness
    for mask, cycle in _fundamental_cycles(adj, edges, edge_id, core):
        candidates.setdefault(mask, cycle)

    ordered = sorted(candidates.items(), key=lambda kv: (len(kv[1]), tuple(sorted(kv[1])), kv[1]))
    basis: dict[int, int] = {}  # pivot bit -> reduced vector
    chosen: list[tuple[int, ...]] = []
    for mask, cycle in ordered:
        v = mask
        while v:
            pivot = v.bit_length() - 1
            if pivot in basis:
                v ^= basis[pivot]
            else:
                basis[pivot] = v
                chosen.append(_normalize_cycle(cycle))
                break
        if len(chosen) == target:
            break
    return chosen


def _normalize_cycle(cycle: tuple[int, ...]) -> tuple[int, ...]:
    """Rotate so the smallest atom leads and walk towards its smaller neighbour."""
    i = cycle.index(min(cycle))
    rot = cycle[i:] + cycle[:i]
    if len(rot) > 2 and rot[-1] < rot[1]:
        rot = (rot[0],) + tuple(reversed(rot[1:]))
    return rot


def _edge_mask(cycle: Sequence[int], edge_id: dict[tuple[int, int], int]) -> int:
    mask = 0
    for i in range(len(cycle)):
        mask |= 1 << edge_id[(cycle[i], cycle[(i + 1) % len(cycle)])]
    return mask


def _bfs_tree(adj: list[list[int]], root: int, allowed: set[int]) -> tuple[dict[int, int], dict[int, int]]:
    parent: dict[int, int] = {}
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w in allowed and w not in dist:
                dist[w] = dist[v] + 1
                parent[w] = v
                queue.append(w)
    return parent, dist


def _path_to_root(parent: dict[int, int], v: int) -> list[int]:
    path = [v]
    while path[-1] in parent:
        path.append(parent[path[-1]])
    return path


def _count_components(adj: list[list[int]]) -> int:
    seen: set[int] = set()
    count = 0
    for start in range(len(adj)):
        if start in seen:
            continue
        count += 1
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return count


def _two_core(adj: list[list[int]]) -> set[int]:
    degree = [len(n) for n in adj]
    removed = set()
    stack = [v for v, d in enumerate(degree) if d < 2]
    while stack:
        v = stack.pop()
        if v in removed:
            continue
        removed.add(v)
        for w in adj[v]:
            if w not in removed:
                degree[w] -= 1
                if degree[w] < 2:
                    stack.append(w)
    return {v for v in range(len(adj)) if v not in removed}


def _fundamental_cycles(adj, edges, edge_id, core):
    parent: dict[int, int] = {}
    depth: dict[int, int] = {}
    for root in sorted(core):
        if root in depth:
            continue
        depth[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w in core and w not in depth:
                    depth[w] = depth[v] + 1
                    parent[w] = v
                    queue.append(w)
    for a, b in edges:
        if a not in core or b not in core or parent.get(a) == b or parent.get(b) == a:
            continue
        pa, pb = [a], [b]
        while pa[-1] != pb[-1]:
            if depth[pa[-1]] >= depth[pb[-1]]:
                pa.append(parent[pa[-1]])
            else:
                pb.append(parent[pb[-1]])
        cycle = tuple(pa + list(reversed(pb[:-1])))
        yield _edge_mask(cycle, edge_id), cycle
