"""Static aggregation of contact sequences, components, and degree-preserving rewiring."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as csgraph_components

from .inference import ContactSequence


def _edge(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u < v else (v, u)


@dataclass
class AggregatedGraph:
    nodes: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]]) -> "AggregatedGraph":
        g = cls()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            g.edges.add(_edge(u, v))
            g.nodes.update((u, v))
        return g

    def degrees(self) -> Counter:
        deg: Counter = Counter()
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


def aggregate(seq: ContactSequence, t0: int | None = None, t1: int | None = None) -> AggregatedGraph:
    """Collapse the events with ``t0 <= t_start <= t1`` into a simple graph."""
    g = AggregatedGraph()
    for e in seq.events:
        if (t0 is not None and e.t_start < t0) or (t1 is not None and e.t_start > t1):
            continue
        g.edges.add(e.pair)
        g.nodes.add(e.node_a)
        g.nodes.add(e.node_b)
    return g


class UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}
        self.size: dict[str, int] = {}

    def add(self, x: str) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def connected_components(g: AggregatedGraph) -> list[set[str]]:
    uf = UnionFind()
    for n in g.nodes:
        uf.add(n)
    for u, v in g.edges:
        uf.union(u, v)
    comps: dict[str, set[str]] = {}
    for n in g.nodes:
        comps.setdefault(uf.find(n), set()).add(n)
    return list(comps.values())


def largest_connected_component(g: AggregatedGraph) -> set[str]:
    """Largest component; ties go to the one holding the smallest node id."""
    comps = connected_components(g)
    if not comps:
        return set()
    return min(comps, key=lambda c: (-len(c), min(c)))


def is_connected(g: AggregatedGraph) -> bool:
    return len(connected_components(g)) <= 1


def configuration_rewire(
    g: AggregatedGraph,
    rng: np.random.Generator,
    swaps_per_edge: int = 10,
    max_tries_factor: int = 100,
) -> AggregatedGraph:
    """Randomize topology with double-edge swaps, keeping degrees and connectivity.

    Aims for ``swaps_per_edge * |E|`` accepted swaps, each replacing edges
    (u, v), (x, y) by (u, y), (x, v) when that creates neither a self-loop nor
    a duplicate edge.  Swaps are committed in windows: after each window the
    graph is checked for connectivity and the window is undone if it fails.
    The window grows by one after a success and halves after a failure, so
    sparse graphs are checked often and dense ones rarely.  Rigid graphs
    (stars, triangles) admit no swap and come back unchanged once the attempt
    budget of ``max_tries_factor`` times the target runs out.
    """
    if not is_connected(g):
        raise ValueError("configuration_rewire needs a connected graph")
    if len(g.edges) < 2:
        return AggregatedGraph(set(g.nodes), set(g.edges))
    # work on integer codes; sorted names keep (min, max) edge order intact
    names = sorted(g.nodes)
    code = {n: i for i, n in enumerate(names)}
    edges = sorted((code[u], code[v]) for u, v in g.edges)
    present = set(edges)
    m = len(edges)
    target = swaps_per_edge * m
    max_tries = max_tries_factor * target
    done = tries = 0
    window = 1
    while done < target and tries < max_tries:
        undo: list[tuple[int, int, tuple[int, int], tuple[int, int]]] = []
        want = min(window, target - done)
        while len(undo) < want and tries < max_tries:
            batch = min(4 * want + 16, max_tries - tries)
            picks = rng.integers(0, m, size=(batch, 2))
            flips = rng.random(batch) < 0.5
            for (i, j), flip in zip(picks.tolist(), flips.tolist()):
                tries += 1
                if i == j:
                    continue
                u, v = edges[i]
                x, y = edges[j]
                if flip:
                    x, y = y, x
                if u == y or x == v:
                    continue
                e1 = (u, y) if u < y else (y, u)
                e2 = (x, v) if x < v else (v, x)
                if e1 in present or e2 in present:
                    continue
                undo.append((i, j, edges[i], edges[j]))
                present.discard(edges[i])
                present.discard(edges[j])
                present.add(e1)
                present.add(e2)
                edges[i], edges[j] = e1, e2
                if len(undo) >= want:
                    break
        if not undo:
            break
        if _codes_connected(len(names), edges):
            done += len(undo)
            window += 1
        else:
            for i, j, old_i, old_j in reversed(undo):
                present.discard(edges[i])
                present.discard(edges[j])
                present.add(old_i)
                present.add(old_j)
                edges[i], edges[j] = old_i, old_j
            window = max(1, window // 2)
    return AggregatedGraph(set(g.nodes), {(names[a], names[b]) for a, b in edges})


def _codes_connected(n: int, edges: list[tuple[int, int]]) -> bool:
    arr = np.asarray(edges, dtype=np.int64)
    adj = coo_matrix((np.ones(len(arr), dtype=np.int8), (arr[:, 0], arr[:, 1])), shape=(n, n))
    return csgraph_components(adj, directed=False)[0] == 1


def save_edge_list(g: AggregatedGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("node_a", "node_b"))
        writer.writerows(sorted(g.edges))
