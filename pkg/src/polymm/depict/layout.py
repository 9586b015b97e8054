"""Deterministic 2D coordinates from ring templates and zig-zag chains.

Ring systems (rings sharing at least two atoms) are laid out once in local
coordinates: the first ring is a regular polygon and every further ring is
built as a regular polygon on an edge it shares with the placed part.
Atoms are then placed breadth-first in index order; acyclic chains turn by
alternating +-60 degrees so that bond angles are 120 degrees, and every ring
system is attached as a rigid block.  A final sweep rotates or reflects the
smaller side of acyclic bonds to remove clashes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from polymm.chem import BondOrder, MolecularGraph

# atoms closer than this (in mean bond lengths) count as overlapping
MIN_DISTANCE = 0.5
# pairs closer than this are penalised during the sweep
_COMFORT = 0.8
# smallest clearance at which a bridged arc keeps unit bonds
_ARC_ACCEPT = 0.6
_MAX_SWEEPS = 12
_SWEEP_ANGLES = tuple(math.radians(a) for a in (180, 60, -60, 120, -120, 30, -30, 90, -90, 150, -150))


class LayoutOverflow(RuntimeError):
    """Collision resolution left overlapping atoms."""

    def __init__(self, clashes: list[tuple[int, int]]):
        super().__init__(f"{len(clashes)} atom pair(s) closer than {MIN_DISTANCE} bond lengths")
        self.clashes = clashes


@dataclass(frozen=True)
class Layout:
    """Atom coordinates in units of the mean bond length.

    ``clashes`` lists atom pairs that remain closer than ``MIN_DISTANCE``;
    a non-empty list sets ``overflow``.
    """

    coords: np.ndarray
    clashes: tuple[tuple[int, int], ...] = ()

    @property
    def overflow(self) -> bool:
        return bool(self.clashes)


def _unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def _angle(v: np.ndarray) -> float:
    return math.atan2(v[1], v[0])


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _ring_systems(graph: MolecularGraph) -> list[list[tuple[int, ...]]]:
    """Rings grouped into systems that share at least one bond."""
    rings = list(graph.rings)
    parent = list(range(len(rings)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(len(rings)):
        for j in range(i + 1, len(rings)):
            if len(set(rings[i]) & set(rings[j])) >= 2:
                parent[find(i)] = find(j)
    groups: dict[int, list[tuple[int, ...]]] = {}
    for i, r in enumerate(rings):
        groups.setdefault(find(i), []).append(r)
    return sorted(groups.values(), key=lambda g: min(min(r) for r in g))


def _polygon_on_edge(p0: np.ndarray, p1: np.ndarray, n: int, side: float) -> list[np.ndarray]:
    """Vertices of a regular unit n-gon containing edge p0->p1, listed from p0.

    ``side`` is +1 or -1 and selects the half-plane holding the polygon.
    """
    step = side * (2 * math.pi / n)
    out = [p0, p1]
    heading = _angle(p1 - p0)
    for _ in range(n - 2):
        heading += step
        out.append(out[-1] + _unit(heading))
    return out


def _side_of(p0: np.ndarray, p1: np.ndarray, q: np.ndarray) -> float:
    d = p1 - p0
    cross = d[0] * (q[1] - p0[1]) - d[1] * (q[0] - p0[0])
    return 1.0 if cross > 0 else -1.0


def _system_template(rings: list[tuple[int, ...]]) -> dict[int, np.ndarray]:
    """Local coordinates for a fused or bridged ring system."""
    first = rings[0]
    n = len(first)
    radius = 0.5 / math.sin(math.pi / n)
    pos: dict[int, np.ndarray] = {}
    for k, a in enumerate(first):
        theta = math.pi / 2 + 2 * math.pi * k / n
        pos[a] = radius * _unit(theta)
    pending = list(rings[1:])
    while pending:
        best = None
        for idx, ring in enumerate(pending):
            shared = sum(1 for a in ring if a in pos)
            if shared >= 2 and (best is None or shared > best[1]):
                best = (idx, shared)
        if best is None:
            # system linked only through single atoms; should not happen after grouping
            ring = pending.pop(0)
            anchor = next(iter(pos.values()))
            for k, a in enumerate(ring):
                pos.setdefault(a, anchor + np.array([1.0 + k, 0.0]))
            continue
        ring = pending.pop(best[0])
        _place_ring(ring, pos)
    return pos


def _place_ring(ring: tuple[int, ...], pos: dict[int, np.ndarray]) -> None:
    n = len(ring)
    placed = [a in pos for a in ring]
    # rotate the ring so that it starts at the beginning of the longest placed run
    start = 0
    for k in range(n):
        if placed[k] and not placed[k - 1]:
            start = k
            break
    seq = ring[start:] + ring[:start]
    run = 0
    while run < n and seq[run] in pos:
        run += 1
    if run == n:
        return
    # the polygon is built on the run's last edge and walks into the unplaced arc
    a, b = seq[run - 1], seq[run - 2]
    centroid = np.mean([pos[x] for x in pos], axis=0)
    if run >= 3:
        side = _side_of(pos[a], pos[b], pos[seq[run - 3]])
    else:
        side = -_side_of(pos[a], pos[b], centroid)
    verts = _polygon_on_edge(pos[a], pos[b], n, side)
    # verts[0] = a, verts[1] = b, verts[2] = seq[run - 3], ...; walk the ring backwards from a
    order = [seq[(run - 1 - k) % n] for k in range(n)]
    mismatch = any(np.linalg.norm(verts[k] - pos[x]) > 1e-6 for k, x in enumerate(order) if x in pos)
    existing = np.array(list(pos.values()))
    fresh = [verts[k] for k, x in enumerate(order) if x not in pos]
    crowded = any(np.min(np.linalg.norm(existing - v, axis=1)) < 0.7 for v in fresh)
    if not mismatch and not crowded:
        for k, x in enumerate(order):
            pos.setdefault(x, verts[k])
        return
    # bridged system: put the unplaced atoms on a circular arc of unit chords between the placed ends
    arc = [x for x in seq[run:] if x not in pos]
    best_pts, best_score = None, -1.0
    # unit chords first; shorter or longer ones only when the unit arc crowds existing atoms
    for step in (1.0, 0.6, 1.4):
        for sign in (1.0, -1.0):
            pts = _unit_arc(pos[a] / step, pos[seq[0]] / step, len(arc) + 1, sign)
            pts = [q * step for q in pts]
            score = min(float(np.min(np.linalg.norm(existing - q, axis=1))) for q in pts)
            if score > best_score + 1e-12:
                best_pts, best_score = pts, score
        if best_score >= _ARC_ACCEPT:
            break
    for x, q in zip(arc, best_pts):
        pos[x] = q


def _unit_arc(pa: np.ndarray, pb: np.ndarray, segments: int, sign: float) -> list[np.ndarray]:
    """Interior points of a path of ``segments`` unit chords from ``pa`` to ``pb``.

    The path lies on a circle through both ends and bulges towards ``sign``
    times the left normal of ``pb - pa``; ends further apart than the path
    length get a straight, evenly spaced path instead.
    """
    chord = pb - pa
    dist = float(np.linalg.norm(chord))
    if dist >= segments - 1e-9 or dist < 1e-9:
        if dist < 1e-9:
            chord, dist = np.array([1.0, 0.0]), 1.0
        return [pa + chord * (k / segments) for k in range(1, segments)]
    normal = sign * np.array([-chord[1], chord[0]]) / dist
    # find the per-chord angle theta with sin(n*theta/2) / sin(theta/2) = dist
    lo, hi = 1e-12, 2 * math.pi / segments
    for _ in range(200):
        mid = (lo + hi) / 2
        if math.sin(segments * mid / 2) / math.sin(mid / 2) > dist:
            lo = mid
        else:
            hi = mid
    theta = (lo + hi) / 2
    radius = 1.0 / (2 * math.sin(theta / 2))
    total = segments * theta
    centre = (pa + pb) / 2 - normal * radius * math.cos(total / 2)
    start = _angle(pa - centre)
    for direction in (1.0, -1.0):
        end = centre + radius * _unit(start + direction * total)
        if np.linalg.norm(end - pb) < 1e-6:
            return [centre + radius * _unit(start + direction * k * theta) for k in range(1, segments)]
    raise AssertionError("arc construction failed")


def _exo_direction(i: int, neighbours: list[np.ndarray], here: np.ndarray) -> float | None:
    """Bisector of the widest free angular gap around an atom."""
    if not neighbours:
        return None
    angles = sorted(_angle(p - here) for p in neighbours)
    if len(angles) == 1:
        return angles[0] + math.pi
    best_gap, best_mid = -1.0, 0.0
    for k, a in enumerate(angles):
        nxt = angles[(k + 1) % len(angles)] + (2 * math.pi if k == len(angles) - 1 else 0.0)
        if nxt - a > best_gap + 1e-12:
            best_gap, best_mid = nxt - a, a + (nxt - a) / 2
    return best_mid


def _is_linear(graph: MolecularGraph, i: int) -> bool:
    orders = [b.order for b in graph.incident(i)]
    return BondOrder.TRIPLE in orders or orders.count(BondOrder.DOUBLE) >= 2


def _child_angles(graph: MolecularGraph, i: int, placed_nbrs: list[np.ndarray], here: np.ndarray,
                  n_children: int, turn: int) -> list[float]:
    if not placed_nbrs:
        return [2 * math.pi * k / n_children for k in range(n_children)]
    angles = sorted(_angle(p - here) for p in placed_nbrs)
    if len(angles) == 1 and n_children == 1:
        incoming = angles[0] + math.pi
        if _is_linear(graph, i):
            return [incoming]
        return [incoming + turn * math.pi / 3]
    # spread the children evenly across the widest free gap
    best_gap, best_start = -1.0, 0.0
    for k, a in enumerate(angles):
        nxt = angles[(k + 1) % len(angles)] + (2 * math.pi if k == len(angles) - 1 else 0.0)
        if nxt - a > best_gap + 1e-12:
            best_gap, best_start = nxt - a, a
    return [best_start + best_gap * (k + 1) / (n_children + 1) for k in range(n_children)]


class _Builder:
    def __init__(self, graph: MolecularGraph):
        self.graph = graph
        self.pos: dict[int, np.ndarray] = {}
        self.turn: dict[int, int] = {}
        self.systems = _ring_systems(graph)
        self.system_of: dict[int, list[int]] = {}
        for s, rings in enumerate(self.systems):
            for a in {a for r in rings for a in r}:
                self.system_of.setdefault(a, []).append(s)
        self.templates: dict[int, dict[int, np.ndarray]] = {}
        self.system_placed: set[int] = set()

    def _template(self, s: int) -> dict[int, np.ndarray]:
        if s not in self.templates:
            self.templates[s] = _system_template(self.systems[s])
        return self.templates[s]

    def place_system(self, s: int, anchor: int, direction: float | None) -> None:
        """Place system ``s`` rigidly with ``anchor`` fixed and its body along ``direction``."""
        local = self._template(s)
        ring_nbrs = [local[j] for j in self.graph.neighbors(anchor) if j in local]
        exo = _exo_direction(anchor, ring_nbrs, local[anchor])
        rot = _rotation(0.0 if direction is None or exo is None else direction + math.pi - exo)
        origin = self.pos.get(anchor, np.zeros(2))
        for a, p in local.items():
            if a not in self.pos:
                self.pos[a] = origin + rot @ (p - local[anchor])
        self.system_placed.add(s)

    def place_atom(self, i: int, at: np.ndarray, direction: float | None) -> None:
        self.pos[i] = at
        for s in self.system_of.get(i, []):
            if s not in self.system_placed:
                self.place_system(s, i, direction)

    def run(self) -> np.ndarray:
        g = self.graph
        n = len(g.atoms)
        if n == 0:
            return np.zeros((0, 2))
        self.place_atom(0, np.zeros(2), None)
        self.turn[0] = 1
        queue = deque([0])
        expanded: set[int] = set()
        while queue:
            u = queue.popleft()
            if u in expanded:
                continue
            expanded.add(u)
            # spiro partners: systems containing u that are still unplaced
            for s in self.system_of.get(u, []):
                if s not in self.system_placed:
                    nbrs = [self.pos[j] for j in g.neighbors(u) if j in self.pos]
                    self.place_system(s, u, _exo_direction(u, nbrs, self.pos[u]))
            children = [j for j in g.neighbors(u) if j not in self.pos]
            if children:
                placed = [self.pos[j] for j in g.neighbors(u) if j in self.pos]
                angles = _child_angles(g, u, placed, self.pos[u], len(children), self.turn.get(u, 1))
                for v, theta in zip(children, angles):
                    self.place_atom(v, self.pos[u] + _unit(theta), theta)
                    self.turn[v] = -self.turn.get(u, 1)
            for j in g.neighbors(u):
                if j not in expanded:
                    queue.append(j)
        return np.array([self.pos[i] for i in range(n)])


def _side_atoms(graph: MolecularGraph, keep: int, move: int) -> list[int]:
    """Atoms reachable from ``move`` without crossing the bond to ``keep``."""
    seen = {move}
    stack = [move]
    while stack:
        u = stack.pop()
        for v in graph.neighbors(u):
            if v not in seen and not (u == move and v == keep):
                seen.add(v)
                stack.append(v)
    return sorted(seen)


def _penalty(coords: np.ndarray, bonded: np.ndarray) -> tuple[int, float]:
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    mask = np.triu(~bonded, 1)
    d = dist[mask]
    hard = int((d < MIN_DISTANCE).sum())
    soft = float(np.clip(_COMFORT - d, 0.0, None).sum())
    return hard, soft


def _resolve(graph: MolecularGraph, coords: np.ndarray) -> np.ndarray:
    n = len(graph.atoms)
    bonded = np.eye(n, dtype=bool)
    for b in graph.bonds:
        bonded[b.begin, b.end] = bonded[b.end, b.begin] = True
    pivots = []
    for b in graph.bonds:
        if b.in_ring:
            continue
        left = _side_atoms(graph, b.end, b.begin)
        if len(left) == n:
            continue
        right = _side_atoms(graph, b.begin, b.end)
        if len(right) <= len(left):
            pivots.append((b.begin, right))
        else:
            pivots.append((b.end, left))
    score = _penalty(coords, bonded)
    for _ in range(_MAX_SWEEPS):
        if score == (0, 0.0):
            break
        improved = False
        for centre, side in pivots:
            idx = np.array(side)
            base = coords[centre]
            for theta in _SWEEP_ANGLES:
                trial = coords.copy()
                trial[idx] = (coords[idx] - base) @ _rotation(theta).T + base
                s = _penalty(trial, bonded)
                if s < score:
                    coords, score, improved = trial, s, True
            # reflection across the pivot bond axis
            anchor = next(j for j in graph.neighbors(centre) if j not in side)
            axis = coords[centre] - coords[anchor]
            axis = axis / np.linalg.norm(axis)
            mirror = 2 * np.outer(axis, axis) - np.eye(2)
            trial = coords.copy()
            trial[idx] = (coords[idx] - base) @ mirror.T + base
            s = _penalty(trial, bonded)
            if s < score:
                coords, score, improved = trial, s, True
        if not improved:
            break
    return coords


def _clashes(graph: MolecularGraph, coords: np.ndarray) -> tuple[tuple[int, int], ...]:
    n = len(graph.atoms)
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(coords[i] - coords[j]) < MIN_DISTANCE:
                out.append((i, j))
    return tuple(out)


def layout_2d(graph: MolecularGraph, strict: bool = False) -> Layout:
    """2D coordinates with unit mean bond length.

    Args:
        graph: molecule to lay out, ideally in canonical atom order.
        strict: raise instead of flagging when overlaps survive the sweep.

    Raises:
        LayoutOverflow: only with ``strict=True``.
    """
    coords = _Builder(graph).run()
    if len(graph.bonds):
        coords = _resolve(graph, coords)
        lengths = [np.linalg.norm(coords[b.begin] - coords[b.end]) for b in graph.bonds]
        coords = coords / float(np.mean(lengths))
    if len(coords):
        coords = coords - coords.mean(axis=0)
    clashes = _clashes(graph, coords)
    if clashes and strict:
        raise LayoutOverflow(list(clashes))
    return Layout(coords=coords, clashes=clashes)
