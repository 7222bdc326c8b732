"""Skip-gram with negative sampling (SGNS) over walk corpora."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numba
import numpy as np

from .corpus import WalkCorpus, corpus_digest, escape_token, unescape_token

__all__ = [
    "Vocabulary",
    "TrainingConfig",
    "EmbeddingMatrix",
    "EmbeddingFormatError",
    "build_vocabulary",
    "train_skipgram",
    "sgns_loss",
    "sgns_gradients",
    "sgns_step",
    "cosine_similarity",
    "save_embeddings",
    "load_embeddings",
    "file_sha256",
]

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    pass


@dataclass
class Vocabulary:
    tokens: list[str]
    counts: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.counts) != len(self.tokens) or (self.counts <= 0).any():
            raise ValueError("every token needs a positive count")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_vocabulary(corpus: WalkCorpus, min_count: int = 1) -> Vocabulary:
    """Tokens seen at least ``min_count`` times, most frequent first, ties by token."""
    if len(corpus) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t for walk in corpus for t in walk)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary(kept, np.array([counts[t] for t in kept], dtype=np.int64))


@dataclass(frozen=True)
class TrainingConfig:
    dimension: int = 500
    window: int = 5
    negatives: int = 25
    epochs: int = 10
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.negatives < 0:
            raise ValueError("negatives must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def deterministic(self) -> bool:
        return self.workers == 1


@dataclass
class EmbeddingMatrix:
    vocab: Vocabulary
    vectors: np.ndarray
    context: np.ndarray | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ValueError("vector rows must match the vocabulary size")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding contains non-finite values")

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __getitem__(self, token: str) -> np.ndarray:
        try:
            return self.vectors[self.vocab.index[token]]
        except KeyError:
            raise KeyError(f"token {token!r} not in vocabulary") from None


# --------------------------------------------------------------------------
# Reference objective (float64, for checks)
# --------------------------------------------------------------------------


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss(W_in: np.ndarray, W_out: np.ndarray, pairs: np.ndarray, negatives: np.ndarray) -> float:
    """Negative SGNS log-likelihood summed over ``(center, context)`` pairs.

    ``negatives[i]`` lists the negative samples drawn for ``pairs[i]``.
    """
    pairs = np.asarray(pairs).reshape(-1, 2)
    negatives = np.asarray(negatives).reshape(len(pairs), -1)
    v = W_in[pairs[:, 0]]
    pos = np.einsum("ij,ij->i", v, W_out[pairs[:, 1]])
    neg = np.einsum("ikj,ij->ik", W_out[negatives], v)
    return float(-_log_sigmoid(pos).sum() - _log_sigmoid(-neg).sum())


def sgns_gradients(
    W_in: np.ndarray, W_out: np.ndarray, pairs: np.ndarray, negatives: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`sgns_loss` with respect to ``W_in`` and ``W_out``."""
    pairs = np.asarray(pairs).reshape(-1, 2)
    negatives = np.asarray(negatives).reshape(len(pairs), -1)
    c, o = pairs[:, 0], pairs[:, 1]
    v = W_in[c]
    u_pos = W_out[o]
    u_neg = W_out[negatives]
    g_pos = _sigmoid(np.einsum("ij,ij->i", v, u_pos)) - 1.0
    g_neg = _sigmoid(np.einsum("ikj,ij->ik", u_neg, v))
    d_in = np.zeros_like(W_in)
    d_out = np.zeros_like(W_out)
    np.add.at(d_in, c, g_pos[:, None] * u_pos + np.einsum("ik,ikj->ij", g_neg, u_neg))
    np.add.at(d_out, o, g_pos[:, None] * v)
    np.add.at(d_out, negatives.ravel(), (g_neg[:, :, None] * v[:, None, :]).reshape(-1, v.shape[1]))
    return d_in, d_out


# --------------------------------------------------------------------------
# Compiled training kernel
# --------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, nogil=True)
def _next_uniform(state):
    # splitmix64
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return float(z >> _S11) * _INV53


@numba.njit(cache=True, nogil=True)
def _pair_update(W_in, W_out, center, target, label, alpha, grad_in):
    """One logistic update of ``W_out[target]``; accumulates the input gradient step."""
    v = W_in[center]
    u = W_out[target]
    f = 0.0
    for j in range(v.shape[0]):
        f += v[j] * u[j]
    if f >= 0:
        sig = 1.0 / (1.0 + np.exp(-f))
        loss = np.log1p(np.exp(-f)) + (0.0 if label > 0 else f)
    else:
        e = np.exp(f)
        sig = e / (1.0 + e)
        loss = np.log1p(e) - (f if label > 0 else 0.0)
    g = (label - sig) * alpha
    for j in range(v.shape[0]):
        grad_in[j] += g * u[j]
        u[j] += g * v[j]
    return loss


@numba.njit(cache=True, nogil=True)
def _sgns_step(W_in, W_out, center, context, negs, alpha, grad_in):
    for j in range(grad_in.shape[0]):
        grad_in[j] = 0.0
    loss = _pair_update(W_in, W_out, center, context, 1.0, alpha, grad_in)
    for k in range(negs.shape[0]):
        t = negs[k]
        if t == context:
            continue
        loss += _pair_update(W_in, W_out, center, t, 0.0, alpha, grad_in)
    v = W_in[center]
    for j in range(v.shape[0]):
        v[j] += grad_in[j]
    return loss


@numba.njit(cache=True, nogil=True)
def _train_chunk(W_in, W_out, ids, offsets, lo, hi, cum, window, negatives,
                 alpha0, min_alpha, epochs, seed):
    dim = W_in.shape[1]
    grad_in = np.zeros(dim, dtype=W_in.dtype)
    negs = np.empty(negatives, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    n_tokens = offsets[hi] - offsets[lo]
    total = max(1, n_tokens * epochs)
    total_mass = cum[cum.shape[0] - 1]
    losses = np.zeros(epochs)
    pairs = np.zeros(epochs, dtype=np.int64)
    done = 0
    for ep in range(epochs):
        for w in range(lo, hi):
            start = offsets[w]
            end = offsets[w + 1]
            for pos in range(start, end):
                alpha = alpha0 * (1.0 - done / total)
                if alpha < min_alpha:
                    alpha = min_alpha
                done += 1
                span = 1 + int(_next_uniform(state) * window)
                if span > window:
                    span = window
                a = max(start, pos - span)
                b = min(end, pos + span + 1)
                for c in range(a, b):
                    if c == pos:
                        continue
                    for k in range(negatives):
                        r = _next_uniform(state) * total_mass
                        negs[k] = np.searchsorted(cum, r, side="right")
                        if negs[k] >= cum.shape[0]:
                            negs[k] = cum.shape[0] - 1
                    losses[ep] += _sgns_step(W_in, W_out, ids[pos], ids[c], negs, alpha, grad_in)
                    pairs[ep] += 1
    return losses, pairs


def sgns_step(
    W_in: np.ndarray, W_out: np.ndarray, center: int, context: int, negatives: np.ndarray, alpha: float
) -> float:
    """Apply one in-place SGD step of the training kernel; returns the pre-step loss."""
    grad = np.zeros(W_in.shape[1], dtype=W_in.dtype)
    return float(_sgns_step(W_in, W_out, center, context, np.asarray(negatives, dtype=np.int64), alpha, grad))


def _encode(corpus: WalkCorpus, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    index = vocab.index
    ids: list[int] = []
    offsets = [0]
    for walk in corpus:
        ids.extend(index[t] for t in walk if t in index)
        offsets.append(len(ids))
    return np.asarray(ids, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def _chunk_seed(seed: int, worker: int) -> np.uint64:
    return np.random.SeedSequence([seed & (2**64 - 1), worker]).generate_state(1, np.uint64)[0]


def train_skipgram(corpus: WalkCorpus, vocab: Vocabulary, cfg: TrainingConfig) -> EmbeddingMatrix:
    """Train SGNS embeddings for ``vocab`` on the walks of ``corpus``.

    Context spans are drawn uniformly from ``1..window`` per center token and
    negatives from the unigram distribution raised to 3/4. The learning rate
    decays linearly over all center tokens of all epochs. With one worker the
    result is bitwise reproducible; more workers share the matrices without
    locks.
    """
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    d = cfg.dimension
    rng = np.random.default_rng(cfg.seed)
    W_in = ((rng.random((len(vocab), d)) - 0.5) / d).astype(np.float32)
    W_out = np.zeros((len(vocab), d), dtype=np.float32)
    ids, offsets = _encode(corpus, vocab)
    cum = np.cumsum(vocab.counts.astype(np.float64) ** 0.75)

    n_walks = len(offsets) - 1
    workers = min(cfg.workers, max(1, n_walks))
    bounds = np.linspace(0, n_walks, workers + 1).astype(np.int64)

    def run(w: int):
        return _train_chunk(W_in, W_out, ids, offsets, int(bounds[w]), int(bounds[w + 1]), cum,
                            cfg.window, cfg.negatives, cfg.learning_rate, cfg.min_learning_rate,
                            cfg.epochs, _chunk_seed(cfg.seed, w))

    if workers == 1:
        results = [run(0)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, range(workers)))
    losses = sum(r[0] for r in results)
    pairs = sum(r[1] for r in results)
    mean_loss = [float(l / p) if p else 0.0 for l, p in zip(np.atleast_1d(losses), np.atleast_1d(pairs))]
    logger.info("trained %d x %d embeddings, epoch losses %s", len(vocab), d, mean_loss)
    meta = {
        "config": asdict(cfg),
        "mode": "deterministic" if workers == 1 else "multi-worker",
        "vocab_size": len(vocab),
        "epoch_loss": mean_loss,
        "corpus": {"strategy": corpus.strategy, "seed": corpus.seed, **corpus.params,
                   "sha256": corpus_digest(corpus)},
    }
    return EmbeddingMatrix(vocab, W_in, W_out, meta)


def cosine_similarity(e: EmbeddingMatrix, a: str, b: str) -> float:
    x = e[a].astype(np.float64)
    y = e[b].astype(np.float64)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.clip(x @ y / (nx * ny), -1.0, 1.0))


# --------------------------------------------------------------------------
# Text format
# --------------------------------------------------------------------------


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta")


def save_embeddings(e: EmbeddingMatrix, path: str | Path, *, write_meta: bool = True) -> None:
    """Write ``<vocab size> <dim>`` then ``token TAB floats`` rows, plus a ``.meta`` JSON sidecar."""
    if len(e.vocab) == 0:
        raise ValueError("refusing to save an empty embedding matrix")
    fmt = " ".join(["%.9g"] * e.dimension)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(e.vocab)} {e.dimension}\n")
        for tok, row in zip(e.vocab.tokens, e.vectors.tolist()):
            fh.write(escape_token(tok) + "\t" + fmt % tuple(row) + "\n")
    if write_meta:
        meta = dict(e.metadata)
        meta["counts"] = e.vocab.counts.tolist()
        meta["sha256"] = file_sha256(path)
        _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_embeddings(path: str | Path, *, verify: bool = True) -> EmbeddingMatrix:
    """Read the text format; checks the ``.meta`` digest when the sidecar exists."""
    meta: dict[str, Any] = {}
    meta_file = _meta_path(path)
    if meta_file.exists():
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
        if verify and meta.get("sha256") not in (None, file_sha256(path)):
            raise EmbeddingFormatError(f"{path}: file does not match the digest in {meta_file.name}")
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise EmbeddingFormatError(f"{path}: malformed header {' '.join(header)!r}")
        n, d = map(int, header)
        tokens: list[str] = []
        rows: list[list[float]] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            tok, sep, values = line.partition("\t")
            if not sep:
                raise EmbeddingFormatError(f"{path}:{lineno}: missing TAB after token")
            row = [float(x) for x in values.split()]
            if len(row) != d:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {d} values, got {len(row)}")
            tokens.append(unescape_token(tok))
            rows.append(row)
    if len(tokens) != n:
        raise EmbeddingFormatError(f"{path}: header announces {n} rows, found {len(tokens)}")
    if len(set(tokens)) != len(tokens):
        raise EmbeddingFormatError(f"{path}: duplicate token")
    counts = meta.pop("counts", None)
    if counts is None or len(counts) != n:
        counts = [1] * n
    vectors = np.asarray(rows, dtype=np.float32).reshape(n, d)
    return EmbeddingMatrix(Vocabulary(tokens, np.asarray(counts)), vectors, None, meta)
