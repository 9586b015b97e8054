"""Connectivity indices and Balaban's J.

Wildcard atoms are ordinary graph vertices here: they add to the degree of
their neighbour and take part in distance sums.
"""

from __future__ import annotations

from collections import deque

from polymm.chem import MolecularGraph
from polymm.descriptors.errors import IsolatedAtom, TooSmall


def chi_indices(graph: MolecularGraph) -> tuple[float, float]:
    """Zero- and first-order connectivity indices (Chi0, Chi1).

    Raises:
        IsolatedAtom: an atom without neighbours, where delta^-1/2 is undefined.
    """
    degrees = [graph.degree(i) for i in range(len(graph.atoms))]
    for i, d in enumerate(degrees):
        if d == 0:
            raise IsolatedAtom(f"atom {i} has no neighbours", i)
    chi0 = sum(d**-0.5 for d in degrees)
    chi1 = sum((degrees[b.begin] * degrees[b.end]) ** -0.5 for b in graph.bonds)
    return chi0, chi1


def distance_row_sums(graph: MolecularGraph) -> list[int]:
    """Sum of shortest-path lengths from each atom, by one BFS per atom."""
    n = len(graph.atoms)
    sums = []
    for src in range(n):
        dist = [-1] * n
        dist[src] = 0
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for w in graph.neighbors(v):
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        sums.append(sum(dist))
    return sums


def balaban_j(graph: MolecularGraph) -> float:
    """Balaban's J over topological (edge-count) distances.

    Raises:
        TooSmall: fewer than two atoms.
    """
    n = len(graph.atoms)
    if n < 2:
        raise TooSmall(f"Balaban J needs at least 2 atoms, got {n}")
    m = len(graph.bonds)
    mu = m - n + 1
    s = distance_row_sums(graph)
    total = sum((s[b.begin] * s[b.end]) ** -0.5 for b in graph.bonds)
    return m / (mu + 1) * total

