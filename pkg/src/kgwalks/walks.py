"""Walk extraction over a triple-expanded knowledge graph.

Depth counts edge traversals in the expanded graph, so a depth-4 walk holds
five vertices: ``root, predicate, object, predicate, object``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

import numpy as np

from .corpus import WalkCorpus
from .rdf_graph import KnowledgeGraph, VertexKind

if TYPE_CHECKING:
    from .community import CommunityPartition

__all__ = [
    "Walk",
    "WalkConfig",
    "root_rng",
    "extract_exhaustive",
    "count_walks_oracle",
    "count_maximal_walks",
    "sample_walks",
    "community_walks",
    "walks_to_tokens",
    "extract_corpus",
    "build_corpus",
]

logger = logging.getLogger(__name__)

Walk = tuple[int, ...]


@dataclass(frozen=True)
class WalkConfig:
    depth: int = 4
    max_walks_per_entity: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.max_walks_per_entity is not None and self.max_walks_per_entity < 1:
            raise ValueError("max_walks_per_entity must be positive")


def root_rng(seed: int, root: int) -> np.random.Generator:
    """Generator seeded from ``(seed, root)`` so roots are order-independent."""
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), root]))


def _check_root(g: KnowledgeGraph, root: int) -> None:
    if g.vertex(root).kind is not VertexKind.ENTITY:
        raise ValueError(f"root {root} ({g.labels[root]!r}) is not an entity vertex")


def extract_exhaustive(g: KnowledgeGraph, root: int, cfg: WalkConfig) -> list[Walk]:
    """Every walk of ``cfg.depth`` hops from ``root``, breadth first.

    Walks that reach a vertex without out-edges early are kept at that length.
    """
    _check_root(g, root)
    out = g.out_edges
    done: list[Walk] = []
    frontier: list[Walk] = [(root,)]
    for _ in range(cfg.depth):
        nxt = []
        for walk in frontier:
            targets = out[walk[-1]]
            if not targets:
                done.append(walk)
            for n in targets:
                nxt.append(walk + (n,))
        frontier = nxt
        if not frontier:
            break
    return done + frontier


def count_walks_oracle(g: KnowledgeGraph, root: int, depth: int) -> int:
    """Number of directed paths with exactly ``depth`` edges starting at ``root``.

    Propagates per-vertex path multiplicities level by level; nothing is
    enumerated.
    """
    g._check(root)
    counts = {root: 1}
    for _ in range(depth):
        nxt: dict[int, int] = {}
        for v, c in counts.items():
            for n in g.out_edges[v]:
                nxt[n] = nxt.get(n, 0) + c
        counts = nxt
        if not counts:
            return 0
    return sum(counts.values())


def count_maximal_walks(g: KnowledgeGraph, root: int, depth: int) -> tuple[int, int]:
    """``(full_length, dead_end)`` walk counts, the sizes ``extract_exhaustive`` produces."""
    counts = {root: 1}
    dead = 0
    for _ in range(depth):
        nxt: dict[int, int] = {}
        for v, c in counts.items():
            targets = g.out_edges[v]
            if not targets:
                dead += c
            for n in targets:
                nxt[n] = nxt.get(n, 0) + c
        counts = nxt
    return sum(counts.values()), dead


def sample_walks(g: KnowledgeGraph, root: int, cfg: WalkConfig, max_attempts: int | None = None) -> list[Walk]:
    """Up to ``cfg.max_walks_per_entity`` distinct walks from random descents.

    Each descent picks a uniform out-edge per step. When the cap is at least
    the number of walks that exist, the exhaustive set is returned instead.
    """
    _check_root(g, root)
    cap = cfg.max_walks_per_entity
    if cap is None:
        raise ValueError("sample_walks needs cfg.max_walks_per_entity")
    full, dead = count_maximal_walks(g, root, cfg.depth)
    if full + dead <= cap:
        return extract_exhaustive(g, root, cfg)

    rng = root_rng(cfg.seed, root)
    out = g.out_edges
    seen: dict[Walk, None] = {}
    attempts = max_attempts if max_attempts is not None else 20 * cap
    for _ in range(attempts):
        walk = [root]
        for _ in range(cfg.depth):
            targets = out[walk[-1]]
            if not targets:
                break
            walk.append(targets[int(rng.integers(len(targets)))])
        seen[tuple(walk)] = None
        if len(seen) >= cap:
            break
    return list(seen)


def community_walks(
    g: KnowledgeGraph,
    root: int,
    cfg: WalkConfig,
    partition: CommunityPartition,
    p: float = 1.0,
    hop_prob: float = 0.1,
) -> list[Walk]:
    """Breadth-first walks with random teleports inside neighbour communities.

    For every out-neighbour ``n`` of a walk's last vertex, the walk is extended
    by ``n`` with probability ``p`` and, independently, by a uniformly chosen
    member of ``n``'s community with probability ``hop_prob``. Walks whose last
    vertex has no out-edges are kept as they are.
    """
    _check_root(g, root)
    if not (0.0 <= p <= 1.0 and 0.0 <= hop_prob <= 1.0):
        raise ValueError("p and hop_prob must lie in [0, 1]")
    rng = root_rng(cfg.seed, root)
    assignment = partition.assignment
    members = partition.communities
    out = g.out_edges
    done: list[Walk] = []
    walks: dict[Walk, None] = {(root,): None}
    for _ in range(cfg.depth):
        new: dict[Walk, None] = {}
        for walk in walks:
            targets = out[walk[-1]]
            if not targets:
                done.append(walk)
            for n in targets:
                if n >= len(assignment):
                    raise KeyError(f"vertex {n} missing from the community partition")
                if rng.random() < p:
                    new[walk + (n,)] = None
                if rng.random() < hop_prob:
                    community = members[assignment[n]]
                    hop = community[int(rng.integers(len(community)))]
                    new[walk + (hop,)] = None
        walks = new
        if not walks:
            break
    return list(dict.fromkeys(done + list(walks)))


def walks_to_tokens(g: KnowledgeGraph, walks: Iterable[Walk]) -> list[tuple[str, ...]]:
    labels = g.labels
    return [tuple(labels[v] for v in w) for w in walks]


# --------------------------------------------------------------------------
# Corpus assembly
# --------------------------------------------------------------------------

Extractor = Callable[[KnowledgeGraph, int], list[Walk]]

_worker_state: dict = {}


def _init_worker(g: KnowledgeGraph, extractor: Extractor) -> None:
    _worker_state["g"] = g
    _worker_state["fn"] = extractor


def _run_chunk(roots: Sequence[int]) -> list[list[Walk]]:
    g, fn = _worker_state["g"], _worker_state["fn"]
    return [fn(g, r) for r in roots]


def extract_corpus(
    g: KnowledgeGraph,
    roots: Sequence[int],
    extractor: Extractor,
    workers: int = 1,
) -> list[list[Walk]]:
    """Run ``extractor`` for every root; results come back in root order.

    ``extractor`` must be picklable when ``workers > 1``.
    """
    if workers <= 1 or len(roots) < 2:
        return [extractor(g, r) for r in roots]
    chunk = max(1, len(roots) // (workers * 4))
    chunks = [roots[i:i + chunk] for i in range(0, len(roots), chunk)]
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(g, extractor)) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [walks for part in parts for walks in part]


def build_corpus(
    g: KnowledgeGraph,
    per_root: Sequence[Sequence[Walk]],
    strategy: str,
    seed: int,
    **params,
) -> WalkCorpus:
    walks = [tokens for walks in per_root for tokens in walks_to_tokens(g, walks)]
    logger.info("assembled %d walks for %d roots", len(walks), len(per_root))
    return WalkCorpus(walks, strategy, params, seed)
