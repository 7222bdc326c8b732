"""Corpus transforms: anonymous walks, walklets, HALK filtering and n-gram relabelling."""

from __future__ import annotations

from collections import defaultdict
from itertools import combinations
from typing import Hashable, Sequence

from .corpus import WalkCorpus

__all__ = [
    "WILDCARD",
    "HALK_THRESHOLDS",
    "NGramMap",
    "anonymize",
    "walklets",
    "halk",
    "halk_per_threshold",
    "inject_wildcards",
    "ngram_relabel",
]

WILDCARD = "*"
HALK_THRESHOLDS = (0.0, 0.1, 0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001)


def anonymize(corpus: WalkCorpus) -> WalkCorpus:
    """Keep the root token; replace each later hop by the first index of that token."""
    out = []
    for walk in corpus:
        first: dict[str, int] = {}
        for i, tok in enumerate(walk):
            first.setdefault(tok, i)
        out.append((walk[0],) + tuple(str(first[tok]) for tok in walk[1:]))
    return corpus.derive(out, "anonymous")


def walklets(corpus: WalkCorpus) -> WalkCorpus:
    """Distinct ``(root, hop)`` pairs, in order of first occurrence."""
    pairs: dict[tuple[str, str], None] = {}
    for walk in corpus:
        for hop in walk[1:]:
            pairs[(walk[0], hop)] = None
    return corpus.derive(pairs, "walklet")


def _walk_frequencies(walks: Sequence[tuple[str, ...]]) -> dict[str, float]:
    counts: dict[str, int] = defaultdict(int)
    for walk in walks:
        for tok in set(walk):
            counts[tok] += 1
    n = len(walks)
    return {tok: c / n for tok, c in counts.items()}


def _halk_filter(walks, freq, thresh):
    return [(w[0],) + tuple(t for t in w[1:] if freq[t] >= thresh) for w in walks]


def halk(corpus: WalkCorpus, thresholds: Sequence[float] = HALK_THRESHOLDS) -> WalkCorpus:
    """Drop rare hops, one copy of the corpus per threshold, concatenated.

    A hop's frequency is the fraction of walks that contain it. Roots are
    always kept.
    """
    if not thresholds:
        raise ValueError("halk needs at least one threshold")
    freq = _walk_frequencies(corpus.walks)
    out = []
    for thresh in thresholds:
        out.extend(_halk_filter(corpus.walks, freq, thresh))
    return corpus.derive(out, "halk", thresholds=list(thresholds))


def halk_per_threshold(corpus: WalkCorpus, thresholds: Sequence[float] = HALK_THRESHOLDS) -> dict[float, WalkCorpus]:
    """One filtered corpus per threshold, for tuning the threshold."""
    freq = _walk_frequencies(corpus.walks)
    return {
        t: corpus.derive(_halk_filter(corpus.walks, freq, t), "halk", thresholds=[t])
        for t in thresholds
    }


def _wildcard_variants(walks: Sequence[tuple[str, ...]], n_wild: int) -> list[tuple[str, ...]]:
    out = list(walks)
    if n_wild <= 0:
        return out
    for walk in walks:
        for comb in combinations(range(1, len(walk)), n_wild):
            new = list(walk)
            for i in comb:
                new[i] = WILDCARD
            out.append(tuple(new))
    return out


def inject_wildcards(corpus: WalkCorpus, n_wild: int) -> WalkCorpus:
    """Originals first, then every walk with ``n_wild`` non-root positions set to ``*``."""
    if n_wild < 0:
        raise ValueError("n_wild must be non-negative")
    if n_wild == 0:
        return corpus
    return corpus.derive(_wildcard_variants(corpus.walks, n_wild), "wildcards", n=n_wild)


class NGramMap:
    """Injective assignment of consecutive integers to n-gram tuples."""

    def __init__(self) -> None:
        self.mapping: dict[tuple[Hashable, ...], int] = {}

    def __len__(self) -> int:
        return len(self.mapping)

    def __getitem__(self, ngram: tuple[Hashable, ...]) -> int:
        label = self.mapping.get(ngram)
        if label is None:
            label = self.mapping[ngram] = len(self.mapping)
        return label

    def token(self, ngram: tuple[Hashable, ...]) -> str:
        return f"ng{self[ngram]}"

    def inverse(self) -> dict[int, tuple[Hashable, ...]]:
        return {v: k for k, v in self.mapping.items()}


def ngram_relabel(
    corpus: WalkCorpus, n: int, n_wild: int = 0, ngram_map: NGramMap | None = None
) -> WalkCorpus:
    """Relabel every window of ``n`` consecutive tokens with a fresh ``ng<k>`` token.

    Each output walk starts with the first ``n`` tokens verbatim, followed by
    one label per window. Walks shorter than ``n`` pass through unchanged.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n_wild < 0:
        raise ValueError("n_wild must be non-negative")
    ngram_map = NGramMap() if ngram_map is None else ngram_map
    out = []
    for walk in _wildcard_variants(corpus.walks, n_wild):
        new = list(walk[:n])
        for i in range(n, len(walk) + 1):
            new.append(ngram_map.token(walk[i - n:i]))
        out.append(tuple(new))
    return corpus.derive(out, "ngram", n=n, wildcards=n_wild)
