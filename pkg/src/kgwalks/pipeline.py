"""End-to-end orchestration: graph -> walk corpus -> embeddings -> evaluation report."""

from __future__ import annotations

import contextlib
import functools
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator, Sequence

from . import transforms
from .community import CommunityPartition, load_partition, louvain, save_partition
from .corpus import WalkCorpus, corpus_digest, write_corpus
from .embedding import (
    EmbeddingMatrix,
    TrainingConfig,
    build_vocabulary,
    file_sha256,
    save_embeddings,
    train_skipgram,
)
from .evaluation import (
    C_GRID,
    CLASSIFIER_NOTE,
    EvaluationReport,
    LabeledSplit,
    derive_seed,
    evaluate_accuracy,
    read_split,
    repeat_runs,
    train_classifier,
)
from .rdf_graph import KnowledgeGraph, build_graph, read_ntriples, read_predicate_list, remove_leak_triples
from .walks import WalkConfig, build_corpus, community_walks, extract_corpus, extract_exhaustive, sample_walks
from .wl import wl_walk_corpus

__all__ = [
    "STRATEGIES",
    "TRANSFORMS",
    "StageError",
    "PipelineConfig",
    "stage",
    "load_graph",
    "select_roots",
    "get_partition",
    "extract_walks",
    "apply_transform",
    "train_embeddings",
    "evaluate_embeddings",
    "run_pipeline",
]

logger = logging.getLogger(__name__)

STRATEGIES = ("random", "wl", "community", "anonymous", "walklet", "halk", "ngram")
TRANSFORMS = ("anonymous", "walklet", "halk", "ngram")


class StageError(RuntimeError):
    def __init__(self, stage_name: str, exc: BaseException):
        self.stage = stage_name
        super().__init__(f"{stage_name}: {exc}")


@contextlib.contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass
class PipelineConfig:
    graph: Path
    split: Path | None = None
    leak: Path | None = None
    roots: Path | None = None
    strategy: str = "random"
    depth: int = 4
    max_walks: int | None = None
    # community
    partition: Path | None = None
    resolution: float = 1.0
    hop_prob: float = 0.1
    sample_prob: float = 1.0
    # wl
    wl_iterations: int = 4
    relabel_root: bool = False
    # ngram
    ngram_n: int = 2
    wildcards: int = 0
    # halk
    thresholds: tuple[float, ...] = transforms.HALK_THRESHOLDS
    halk_mode: str = "tune"
    # embedding
    dim: int = 500
    window: int = 5
    negatives: int = 25
    epochs: int = 10
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    # classifier
    grid: tuple[float, ...] = C_GRID
    folds: int = 5
    repetitions: int = 5
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    deterministic: bool = False
    out_dir: Path = Path(".")

    def __post_init__(self) -> None:
        if self.deterministic:
            self.workers = 1

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(STRATEGIES)}")
        if self.halk_mode not in ("tune", "concat"):
            raise ValueError("halk_mode must be 'tune' or 'concat'")
        for name in ("graph", "split", "leak", "roots"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"{name} file not found: {path}")

    def fingerprint(self) -> str:
        """Digest of every setting that influences results (paths and workers excluded)."""
        skip = {"graph", "split", "leak", "roots", "partition", "out_dir", "workers"}
        data = {k: v for k, v in asdict(self).items() if k not in skip}
        for name in ("graph", "split", "leak", "roots"):
            path = getattr(self, name)
            data[name] = file_sha256(path) if path is not None else None
        text = json.dumps(data, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def training_config(self, seed: int) -> TrainingConfig:
        return TrainingConfig(
            dimension=self.dim, window=self.window, negatives=self.negatives, epochs=self.epochs,
            learning_rate=self.learning_rate, min_learning_rate=self.min_learning_rate,
            seed=seed, workers=1 if self.deterministic else self.workers,
        )


def load_graph(path: Path, leak: Path | None = None) -> KnowledgeGraph:
    triples = read_ntriples(path)
    if leak is not None:
        before = len(triples)
        triples = remove_leak_triples(triples, read_predicate_list(leak))
        logger.info("removed %d leaking triples", before - len(triples))
    g = build_graph(triples)
    logger.info("graph: %d vertices, %d edges", len(g), g.n_edges)
    return g


def select_roots(g: KnowledgeGraph, split: LabeledSplit | None, roots_file: Path | None) -> list[int]:
    if split is not None:
        names = split.entities
    elif roots_file is not None:
        names = [line.strip().strip("<>") for line in Path(roots_file).read_text(encoding="utf-8").splitlines()
                 if line.strip() and not line.startswith("#")]
    else:
        return g.entities()
    roots = []
    for name in names:
        try:
            roots.append(g.entity(name))
        except KeyError:
            raise KeyError(f"root entity {name!r} does not occur in the graph") from None
    return roots


def get_partition(g: KnowledgeGraph, cfg: PipelineConfig) -> CommunityPartition:
    """Load the partition file if given, else reuse or fill the on-disk cache."""
    graph_hash = g.fingerprint()
    if cfg.partition is not None:
        return load_partition(cfg.partition, graph_hash)
    cache = Path(cfg.out_dir) / f"partition-{graph_hash[:16]}-r{cfg.resolution:g}.txt"
    if cache.exists():
        logger.info("using cached partition %s", cache)
        return load_partition(cache, graph_hash)
    partition = louvain(g, cfg.resolution, cfg.seed)
    cache.parent.mkdir(parents=True, exist_ok=True)
    save_partition(partition, cache, graph_hash)
    logger.info("louvain: %d communities, cached at %s", len(partition), cache)
    return partition


def _base_extractor(cfg: PipelineConfig):
    wcfg = WalkConfig(cfg.depth, cfg.max_walks, cfg.seed)
    if cfg.max_walks is None:
        return functools.partial(extract_exhaustive, cfg=wcfg)
    return functools.partial(sample_walks, cfg=wcfg)


def _extract_params(cfg: PipelineConfig) -> dict[str, Any]:
    params: dict[str, Any] = {"depth": cfg.depth}
    if cfg.max_walks is not None:
        params["max_walks"] = cfg.max_walks
    params["config"] = cfg.fingerprint()
    return params


def extract_walks(g: KnowledgeGraph, roots: Sequence[int], cfg: PipelineConfig) -> WalkCorpus:
    """Walk corpus for ``cfg.strategy``; transform strategies start from random walks."""
    params = _extract_params(cfg)
    workers = 1 if cfg.deterministic else cfg.workers
    if cfg.strategy == "community":
        partition = get_partition(g, cfg)
        fn = functools.partial(community_walks, cfg=WalkConfig(cfg.depth, None, cfg.seed),
                               partition=partition, p=cfg.sample_prob, hop_prob=cfg.hop_prob)
        per_root = extract_corpus(g, roots, fn, workers)
        return build_corpus(g, per_root, "community", cfg.seed, **params,
                            hop_prob=cfg.hop_prob, p=cfg.sample_prob, resolution=cfg.resolution)
    per_root = extract_corpus(g, roots, _base_extractor(cfg), workers)
    if cfg.strategy == "wl":
        return wl_walk_corpus(g, per_root, cfg.wl_iterations, relabel_root=cfg.relabel_root,
                              seed=cfg.seed, **params)
    corpus = build_corpus(g, per_root, "random", cfg.seed, **params)
    if cfg.strategy in TRANSFORMS:
        corpus = apply_transform(corpus, cfg.strategy, cfg)
    return corpus


def apply_transform(corpus: WalkCorpus, name: str, cfg: PipelineConfig) -> WalkCorpus:
    if name == "anonymous":
        return transforms.anonymize(corpus)
    if name == "walklet":
        return transforms.walklets(corpus)
    if name == "halk":
        return transforms.halk(corpus, cfg.thresholds)
    if name == "ngram":
        return transforms.ngram_relabel(corpus, cfg.ngram_n, cfg.wildcards)
    raise ValueError(f"unknown transform {name!r}")


def train_embeddings(corpus: WalkCorpus, tcfg: TrainingConfig) -> EmbeddingMatrix:
    vocab = build_vocabulary(corpus, min_count=1)
    return train_skipgram(corpus, vocab, tcfg)


def evaluate_embeddings(emb: EmbeddingMatrix, split: LabeledSplit, cfg: PipelineConfig, seed: int):
    clf = train_classifier(emb, split, cfg.grid, cfg.folds, seed)
    return evaluate_accuracy(clf, emb, split), clf


def _halk_choice(corpus: WalkCorpus, split: LabeledSplit, cfg: PipelineConfig) -> tuple[WalkCorpus, dict]:
    """Pick the HALK threshold with the best cross-validated train accuracy."""
    candidates = transforms.halk_per_threshold(corpus, cfg.thresholds)
    seed = derive_seed(cfg.seed, 0)
    scores = {}
    for thresh, cand in candidates.items():
        emb = train_embeddings(cand, cfg.training_config(seed))
        clf = train_classifier(emb, split, cfg.grid, cfg.folds, seed)
        scores[thresh] = max(clf.cv_scores.values())
        logger.info("halk threshold %g: cv accuracy %.4f", thresh, scores[thresh])
    best = max(cfg.thresholds, key=lambda t: (scores[t], -cfg.thresholds.index(t)))
    return candidates[best], {"halk_threshold": best, "halk_cv": {str(k): v for k, v in scores.items()}}


def run_pipeline(cfg: PipelineConfig, save_embeddings_for: str = "first") -> EvaluationReport:
    """Extract, (transform,) train and evaluate; writes corpus, embeddings and report to ``cfg.out_dir``."""
    cfg.validate()
    if cfg.split is None:
        raise ValueError("the pipeline needs a split file")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with stage("load"):
        g = load_graph(cfg.graph, cfg.leak)
        split = read_split(cfg.split)
        roots = select_roots(g, split, None)
    extra: dict[str, Any] = {}
    with stage("extract"):
        if cfg.strategy == "halk" and cfg.halk_mode == "tune":
            base = extract_walks(g, roots, replace(cfg, strategy="random"))
            corpus, extra = _halk_choice(base, split, cfg)
        else:
            corpus = extract_walks(g, roots, cfg)
        corpus_path = out / "corpus.tsv"
        write_corpus(corpus, corpus_path)
        logger.info("wrote %d walks to %s", len(corpus), corpus_path)

    embedding_hashes: list[str] = []

    def one_run(seed: int):
        with stage("train"):
            emb = train_embeddings(corpus, cfg.training_config(seed))
            run_id = len(embedding_hashes)
            if save_embeddings_for == "all" or (save_embeddings_for == "first" and run_id == 0):
                path = out / ("embeddings.txt" if run_id == 0 else f"embeddings-{run_id}.txt")
                save_embeddings(emb, path)
                embedding_hashes.append(file_sha256(path))
            else:
                embedding_hashes.append("")
        with stage("evaluate"):
            acc, clf = evaluate_embeddings(emb, split, cfg, seed)
        logger.info("run %d: accuracy %.4f (C=%g)", run_id, acc, clf.C)
        return acc, {"seed": seed, "C": clf.C, "cv": {str(k): v for k, v in clf.cv_scores.items()}}

    report = repeat_runs(one_run, cfg.repetitions, cfg.seed)
    report.metadata.update({
        "strategy": cfg.strategy,
        "config": cfg.fingerprint(),
        "corpus_sha256": corpus_digest(corpus),
        "corpus_walks": len(corpus),
        "embedding_sha256": [h for h in embedding_hashes if h],
        "mode": "deterministic" if cfg.deterministic or cfg.workers == 1 else "multi-worker",
        "classifier": CLASSIFIER_NOTE,
        **extra,
    })
    (out / "report.json").write_text(report.to_text(), encoding="utf-8")
    return report
