"""Louvain community detection on the undirected projection of the expanded graph."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .rdf_graph import KnowledgeGraph

__all__ = [
    "CommunityPartition",
    "partition_from_assignment",
    "undirected_projection",
    "louvain",
    "louvain_adjacency",
    "modularity",
    "export_partition_tsv",
    "save_partition",
    "load_partition",
]

_EPS = 1e-12


@dataclass(frozen=True)
class CommunityPartition:
    assignment: tuple[int, ...]
    communities: tuple[tuple[int, ...], ...]
    resolution: float = 1.0

    def __post_init__(self) -> None:
        for c, members in enumerate(self.communities):
            if not members:
                raise ValueError(f"community {c} is empty")
            for v in members:
                if self.assignment[v] != c:
                    raise ValueError(f"vertex {v} listed in community {c} but assigned {self.assignment[v]}")
        if sum(map(len, self.communities)) != len(self.assignment):
            raise ValueError("communities do not cover the assignment")

    def __len__(self) -> int:
        return len(self.communities)


def partition_from_assignment(assignment: Sequence[int], resolution: float = 1.0) -> CommunityPartition:
    """Renumber arbitrary community keys densely, in order of first appearance."""
    dense: dict[int, int] = {}
    ids = tuple(dense.setdefault(c, len(dense)) for c in assignment)
    members: list[list[int]] = [[] for _ in dense]
    for v, c in enumerate(ids):
        members[c].append(v)
    return CommunityPartition(ids, tuple(map(tuple, members)), resolution)


def undirected_projection(g: KnowledgeGraph) -> list[dict[int, float]]:
    """Unit-weight undirected adjacency; parallel edges accumulate weight."""
    adj: list[dict[int, float]] = [{} for _ in range(len(g))]
    for u, v in g.edges():
        adj[u][v] = adj[u].get(v, 0.0) + 1.0
        if u != v:
            adj[v][u] = adj[v].get(u, 0.0) + 1.0
    return adj


def modularity(g: KnowledgeGraph, partition: CommunityPartition, resolution: float = 1.0) -> float:
    """Newman modularity of ``partition`` on the undirected projection of ``g``."""
    if len(partition.assignment) != len(g):
        raise ValueError("partition does not cover the graph")
    m = g.n_edges
    if m == 0:
        return 0.0
    comm = np.asarray(partition.assignment)
    edges = np.array(list(g.edges()), dtype=np.int64).reshape(-1, 2)
    internal = np.bincount(comm[edges[:, 0]][comm[edges[:, 0]] == comm[edges[:, 1]]], minlength=len(partition))
    degree = np.bincount(edges.ravel(), minlength=len(g)).astype(float)
    total = np.bincount(comm, weights=degree, minlength=len(partition))
    return float(np.sum(internal / m - resolution * (total / (2.0 * m)) ** 2))


def _one_level(
    adj: list[dict[int, float]],
    loops: list[float],
    m: float,
    resolution: float,
    rng: np.random.Generator,
) -> tuple[list[int], bool]:
    """Local moving phase; returns community per node and whether anything moved."""
    n = len(adj)
    degree = [2.0 * loops[i] + sum(w for j, w in adj[i].items() if j != i) for i in range(n)]
    comm = list(range(n))
    total = list(degree)
    order = rng.permutation(n)
    moved_any = False
    while True:
        moved = False
        for i in order:
            i = int(i)
            ci = comm[i]
            ki = degree[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] = links.get(comm[j], 0.0) + w
            total[ci] -= ki
            best = ci
            best_gain = links.get(ci, 0.0) / m - resolution * total[ci] * ki / (2.0 * m * m)
            for c, k_in in links.items():
                gain = k_in / m - resolution * total[c] * ki / (2.0 * m * m)
                if gain > best_gain + _EPS:
                    best, best_gain = c, gain
            total[best] += ki
            if best != ci:
                comm[i] = best
                moved = moved_any = True
        if not moved:
            return comm, moved_any


def _aggregate(
    adj: list[dict[int, float]], loops: list[float], comm: list[int]
) -> tuple[list[dict[int, float]], list[float], list[int]]:
    dense: dict[int, int] = {}
    relabel = [dense.setdefault(c, len(dense)) for c in comm]
    k = len(dense)
    new_adj: list[dict[int, float]] = [{} for _ in range(k)]
    new_loops = [0.0] * k
    for i, nbrs in enumerate(adj):
        ci = relabel[i]
        new_loops[ci] += loops[i]
        for j, w in nbrs.items():
            cj = relabel[j]
            if ci == cj:
                # each internal edge is visited from both ends
                new_loops[ci] += w / 2.0
            else:
                new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
    return new_adj, new_loops, relabel


def louvain_adjacency(adj: Sequence[dict[int, float]], resolution: float = 1.0, seed: int = 0) -> list[int]:
    """Louvain on a symmetric weighted adjacency (no self-loops); returns raw community keys."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    n = len(adj)
    adj = [dict(nbrs) for nbrs in adj]
    loops = [0.0] * n
    m = sum(w for nbrs in adj for w in nbrs.values()) / 2.0
    membership = list(range(n))
    if m == 0:
        return membership
    rng = np.random.default_rng(seed)
    while True:
        comm, improved = _one_level(adj, loops, m, resolution, rng)
        if not improved:
            break
        adj, loops, relabel = _aggregate(adj, loops, comm)
        membership = [relabel[c] for c in membership]
        if len(adj) == 1:
            break
    return membership


def louvain(g: KnowledgeGraph, resolution: float = 1.0, seed: int = 0) -> CommunityPartition:
    """Two-phase Louvain (local moving, then aggregation) until no move helps.

    Runs on the undirected unit-weight projection of ``g``. Node visiting
    order in each local-moving phase is shuffled with ``seed``; ties go to the
    first best community encountered.
    """
    if len(g) == 0:
        raise ValueError("louvain needs a non-empty graph")
    membership = louvain_adjacency(undirected_projection(g), resolution, seed)
    return partition_from_assignment(membership, resolution)


def export_partition_tsv(g: KnowledgeGraph, partition: CommunityPartition, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v, c in enumerate(partition.assignment):
            fh.write(f"{g.labels[v]}\t{c}\n")


def save_partition(partition: CommunityPartition, path: str | Path, graph_hash: str) -> None:
    """Cache format: header with graph hash and resolution, then one community id per vertex."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# graph={graph_hash} resolution={partition.resolution!r}\n")
        fh.writelines(f"{c}\n" for c in partition.assignment)


def load_partition(path: str | Path, graph_hash: str | None = None) -> CommunityPartition:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing partition header")
        meta = dict(item.split("=", 1) for item in header[1:].split())
        if graph_hash is not None and meta.get("graph") != graph_hash:
            raise ValueError(f"{path}: partition was computed for a different graph")
        assignment = [int(line) for line in fh if line.strip()]
    return partition_from_assignment(assignment, float(meta.get("resolution", 1.0)))
