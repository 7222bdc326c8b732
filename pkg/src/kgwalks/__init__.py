"""Walk-based knowledge-graph embeddings: walk extraction strategies, corpus
transforms, skip-gram training and node-classification evaluation."""

from .community import CommunityPartition, louvain, modularity
from .corpus import WalkCorpus, read_corpus, write_corpus
from .embedding import (
    EmbeddingMatrix,
    TrainingConfig,
    Vocabulary,
    build_vocabulary,
    cosine_similarity,
    load_embeddings,
    save_embeddings,
    train_skipgram,
)
from .evaluation import (
    EvaluationReport,
    LabeledSplit,
    average_rank,
    evaluate_accuracy,
    repeat_runs,
    train_classifier,
)
from .rdf_graph import (
    KnowledgeGraph,
    Triple,
    VertexKind,
    build_graph,
    in_neighbours,
    ingest_feature_network,
    out_neighbours,
    parse_ntriples,
    remove_leak_triples,
)
from .transforms import NGramMap, anonymize, halk, inject_wildcards, ngram_relabel, walklets
from .walks import WalkConfig, community_walks, count_walks_oracle, extract_exhaustive, sample_walks
from .wl import WLLabelStore, check_wl_bijection, wl_relabel, wl_walk_corpus

__version__ = "0.1.0"

__all__ = [
    "anonymize",
    "average_rank",
    "build_graph",
    "build_vocabulary",
    "check_wl_bijection",
    "community_walks",
    "CommunityPartition",
    "cosine_similarity",
    "count_walks_oracle",
    "EmbeddingMatrix",
    "evaluate_accuracy",
    "EvaluationReport",
    "extract_exhaustive",
    "halk",
    "in_neighbours",
    "ingest_feature_network",
    "inject_wildcards",
    "KnowledgeGraph",
    "LabeledSplit",
    "load_embeddings",
    "louvain",
    "modularity",
    "ngram_relabel",
    "NGramMap",
    "out_neighbours",
    "parse_ntriples",
    "read_corpus",
    "remove_leak_triples",
    "repeat_runs",
    "sample_walks",
    "save_embeddings",
    "train_classifier",
    "train_skipgram",
    "TrainingConfig",
    "Triple",
    "VertexKind",
    "Vocabulary",
    "WalkConfig",
    "WalkCorpus",
    "walklets",
    "wl_relabel",
    "wl_walk_corpus",
    "WLLabelStore",
    "write_corpus",
]
