"""Weisfeiler-Lehman relabelling over in-neighbourhoods, WL walk corpora, and a
checker for the claim that WL labels of RDF entities are in bijection with the
entities themselves."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import WalkCorpus
from .rdf_graph import KnowledgeGraph, VertexKind
from .walks import Walk

__all__ = [
    "WLLabelStore",
    "BijectionReport",
    "wl_relabel",
    "check_wl_bijection",
    "wl_walk_corpus",
    "dump_wl_labels",
]


@dataclass(frozen=True)
class WLLabelStore:
    """``labels[k][v]`` is the integer WL label of vertex ``v`` after ``k`` rounds."""

    labels: tuple[tuple[int, ...], ...]
    multiset: bool = False

    @property
    def iterations(self) -> int:
        return len(self.labels) - 1

    def label(self, v: int, k: int) -> int:
        return self.labels[k][v]


def wl_relabel(g: KnowledgeGraph, iterations: int, *, multiset: bool = False) -> WLLabelStore:
    """Compute WL labels for rounds ``0..iterations``.

    Round 0 interns the original vertex labels. Round ``k`` interns the pair
    ``(previous label, sorted labels of the in-neighbours)``; by default the
    neighbour labels are deduplicated first (set semantics), pass
    ``multiset=True`` to keep repeats. Interning follows vertex id order, so
    the integers are deterministic and collision-free within a round.
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    table0: dict[str, int] = {}
    current = tuple(table0.setdefault(label, len(table0)) for label in g.labels)
    rounds = [current]
    for _ in range(iterations):
        table: dict[tuple[int, tuple[int, ...]], int] = {}
        nxt = []
        for v, preds in enumerate(g.in_edges):
            neigh = [current[u] for u in preds]
            key = (current[v], tuple(sorted(neigh if multiset else set(neigh))))
            nxt.append(table.setdefault(key, len(table)))
        current = tuple(nxt)
        rounds.append(current)
    return WLLabelStore(tuple(rounds), multiset)


@dataclass
class BijectionReport:
    # (iteration, vertex, vertex) triples with equal WL labels but distinct vertices
    violations: list[tuple[int, int, int]] = field(default_factory=list)
    checked_vertices: int = 0
    iterations: int = 0

    def __bool__(self) -> bool:
        return not self.violations


def check_wl_bijection(
    g: KnowledgeGraph,
    store: WLLabelStore,
    kinds: Iterable[VertexKind] = (VertexKind.ENTITY,),
) -> BijectionReport:
    """Report vertex pairs of the given kinds that share a WL label at some round."""
    if store.labels and len(store.labels[0]) != len(g):
        raise ValueError("label store was computed on a different graph")
    kinds = set(kinds)
    subset = [v for v, k in enumerate(g.kinds) if k in kinds]
    report = BijectionReport(checked_vertices=len(subset), iterations=store.iterations)
    for k, labels in enumerate(store.labels):
        groups: dict[int, list[int]] = {}
        for v in subset:
            groups.setdefault(labels[v], []).append(v)
        for members in groups.values():
            report.violations.extend((k, a, b) for a, b in combinations(members, 2))
    return report


def wl_token(k: int, label: int) -> str:
    return f"wl{k}_{label}"


def wl_walk_corpus(
    g: KnowledgeGraph,
    base_walks: Sequence[Sequence[Walk]],
    iterations: int,
    *,
    store: WLLabelStore | None = None,
    relabel_root: bool = False,
    seed: int = 0,
    **params,
) -> WalkCorpus:
    """One copy of the base walks per round ``0..iterations`` with hops rendered as WL tokens.

    Roots keep their original labels unless ``relabel_root`` is set.
    """
    if store is None:
        store = wl_relabel(g, iterations)
    elif store.iterations < iterations:
        raise ValueError("label store has fewer rounds than requested")
    out = []
    for k in range(iterations + 1):
        labels = store.labels[k]
        for walks in base_walks:
            for walk in walks:
                head = wl_token(k, labels[walk[0]]) if relabel_root else g.labels[walk[0]]
                out.append((head,) + tuple(wl_token(k, labels[v]) for v in walk[1:]))
    return WalkCorpus(out, "wl", {"wl_iterations": iterations, **params}, seed)


def dump_wl_labels(g: KnowledgeGraph, store: WLLabelStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, labels in enumerate(store.labels):
            for v, lab in enumerate(labels):
                fh.write(f"{g.labels[v]}\t{k}\t{lab}\n")
