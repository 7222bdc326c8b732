"""Node-classification evaluation on top of entity embeddings.

The classifier is an L2-regularised multinomial logistic regression trained by
full-batch gradient descent with a backtracking step size. Its regularisation
strength ``C`` plays the same role as an SVM's: the penalty is
``||W||^2 / (2 C n)`` on top of the mean cross-entropy.
"""

from __future__ import annotations

import hashlib
import json
import math
import statistics
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import rankdata
from sklearn.model_selection import StratifiedKFold

from .embedding import EmbeddingMatrix

__all__ = [
    "C_GRID",
    "CLASSIFIER_NOTE",
    "LabeledSplit",
    "LogisticRegression",
    "TrainedClassifier",
    "EvaluationReport",
    "read_split",
    "entity_features",
    "train_classifier",
    "evaluate_accuracy",
    "repeat_runs",
    "derive_seed",
    "average_rank",
    "render_rank_table",
    "read_score_table",
]

C_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
CLASSIFIER_NOTE = "L2 multinomial logistic regression (stands in for an RBF-kernel SVM)"


@dataclass(frozen=True)
class LabeledSplit:
    train: tuple[tuple[str, str], ...]
    test: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        overlap = {e for e, _ in self.train} & {e for e, _ in self.test}
        if overlap:
            raise ValueError(f"entities in both train and test: {sorted(overlap)[:5]}")
        missing = {c for _, c in self.test} - {c for _, c in self.train}
        if missing:
            raise ValueError(f"test classes absent from train: {sorted(missing)}")

    @property
    def entities(self) -> list[str]:
        return [e for e, _ in self.train] + [e for e, _ in self.test]


def read_split(path: str | Path) -> LabeledSplit:
    """Read ``entity TAB class TAB train|test`` lines."""
    train, test = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("train", "test"):
                raise ValueError(f"{path}:{lineno}: expected 'entity<TAB>class<TAB>train|test'")
            entity, label, which = parts
            if entity.startswith("<") and entity.endswith(">"):
                entity = entity[1:-1]
            (train if which == "train" else test).append((entity, label))
    return LabeledSplit(tuple(train), tuple(test))


def entity_features(emb: EmbeddingMatrix, entities: Sequence[str]) -> np.ndarray:
    missing = [e for e in entities if e not in emb]
    if missing:
        raise KeyError(f"entity {missing[0]!r} has no embedding ({len(missing)} missing in total)")
    idx = [emb.vocab.index[e] for e in entities]
    return np.asarray(emb.vectors[idx], dtype=np.float64)


class LogisticRegression:
    """Multinomial logistic regression with standardised inputs."""

    def __init__(self, C: float = 1.0, tol: float = 1e-6, max_steps: int = 1000):
        if C <= 0:
            raise ValueError("C must be positive")
        self.C = C
        self.tol = tol
        self.max_steps = max_steps

    def _objective(self, X, Y, W, b):
        n = X.shape[0]
        Z = X @ W + b
        lse = logsumexp(Z, axis=1)
        loss = float(np.mean(lse - np.sum(Z * Y, axis=1))) + float(np.sum(W * W)) / (2 * self.C * n)
        P = np.exp(Z - lse[:, None])
        G = (P - Y) / n
        return loss, X.T @ G + W / (self.C * n), G.sum(axis=0)

    def fit(self, X: np.ndarray, y: Sequence[Any]) -> "LogisticRegression":
        X = np.asarray(X, dtype=np.float64)
        self.classes_, codes = np.unique(np.asarray(y), return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        Xs = (X - self.mean_) / self.scale_
        Y = np.eye(len(self.classes_))[codes]
        W = np.zeros((X.shape[1], len(self.classes_)))
        b = np.zeros(len(self.classes_))
        loss, gW, gb = self._objective(Xs, Y, W, b)
        self.losses_ = [loss]
        step = 1.0
        for _ in range(self.max_steps):
            sq = float(np.sum(gW * gW) + np.sum(gb * gb))
            if math.sqrt(sq) < self.tol:
                break
            while True:
                W_new, b_new = W - step * gW, b - step * gb
                new_loss, new_gW, new_gb = self._objective(Xs, Y, W_new, b_new)
                # Armijo sufficient decrease; shrink the step until it holds
                if new_loss <= loss - 0.5 * step * sq or step < 1e-12:
                    break
                step *= 0.5
            improvement = loss - new_loss
            W, b, loss, gW, gb = W_new, b_new, new_loss, new_gW, new_gb
            self.losses_.append(loss)
            step *= 2.0
            if improvement < self.tol * max(1.0, abs(loss)):
                break
        self.coef_, self.intercept_ = W, b
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_
        return Xs @ self.coef_ + self.intercept_

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


@dataclass
class TrainedClassifier:
    model: LogisticRegression
    C: float
    cv_scores: dict[float, float]


def train_classifier(
    emb: EmbeddingMatrix,
    split: LabeledSplit,
    reg_grid: Iterable[float] = C_GRID,
    folds: int = 5,
    seed: int = 0,
) -> TrainedClassifier:
    """Choose ``C`` by stratified k-fold CV on the train split, then refit on all of it."""
    entities = [e for e, _ in split.train]
    y = np.array([c for _, c in split.train])
    if len(set(y.tolist())) < 2:
        raise ValueError("train split has a single class; cannot cross-validate")
    X = entity_features(emb, entities)
    grid = list(reg_grid)
    if not grid or any(c <= 0 for c in grid):
        raise ValueError("regularisation grid must hold positive values")
    # classes smaller than the fold count only trigger a warning in the splitter
    k = max(2, min(folds, int(np.unique(y, return_counts=True)[1].max())))
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed % (2**32))
    scores: dict[float, float] = {}
    for C in grid:
        acc = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            folds_iter = list(splitter.split(X, y))
        for tr, va in folds_iter:
            model = LogisticRegression(C).fit(X[tr], y[tr])
            acc.append(np.mean(model.predict(X[va]) == y[va]))
        scores[C] = float(np.mean(acc))
    best = max(grid, key=lambda c: (scores[c], -grid.index(c)))
    return TrainedClassifier(LogisticRegression(best).fit(X, y), best, scores)


def evaluate_accuracy(clf: TrainedClassifier | LogisticRegression, emb: EmbeddingMatrix, split: LabeledSplit) -> float:
    model = clf.model if isinstance(clf, TrainedClassifier) else clf
    if not split.test:
        raise ValueError("split has no test entities")
    X = entity_features(emb, [e for e, _ in split.test])
    y = np.array([c for _, c in split.test])
    return float(np.mean(model.predict(X) == y))


@dataclass
class EvaluationReport:
    accuracies: list[float]
    chosen: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    classifier: str = CLASSIFIER_NOTE

    @property
    def mean(self) -> float:
        return float(statistics.fmean(self.accuracies))

    @property
    def std(self) -> float:
        return float(statistics.stdev(self.accuracies)) if len(self.accuracies) > 1 else 0.0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["mean"] = self.mean
        d["std"] = self.std
        return d

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def derive_seed(seed: int, run: int) -> int:
    return int(np.random.SeedSequence([seed & (2**64 - 1), run, 0x5EED]).generate_state(1)[0])


def repeat_runs(
    run: Callable[[int], float | tuple[float, dict[str, Any]]],
    repetitions: int = 5,
    seed: int = 0,
    *,
    vary_seed: bool = True,
    metadata: Mapping[str, Any] | None = None,
) -> EvaluationReport:
    """Call ``run(seed_i)`` ``repetitions`` times and collect the accuracies.

    ``run`` may return just the accuracy or ``(accuracy, details)``. With
    ``vary_seed=False`` every run receives ``seed`` itself.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    accs, chosen = [], []
    for i in range(repetitions):
        result = run(derive_seed(seed, i) if vary_seed else seed)
        acc, details = result if isinstance(result, tuple) else (result, {})
        accs.append(float(acc))
        chosen.append(dict(details))
    return EvaluationReport(accs, chosen, dict(metadata or {}))


# --------------------------------------------------------------------------
# Cross-strategy ranking
# --------------------------------------------------------------------------


def average_rank(table: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    """Mean per-dataset rank of each strategy (1 = best, ties share the mean position)."""
    if not table:
        raise ValueError("empty score table")
    strategies = list(next(iter(table.values())))
    ranks = []
    for dataset, scores in table.items():
        missing = [s for s in strategies if s not in scores]
        extra = [s for s in scores if s not in strategies]
        if missing or extra:
            raise KeyError(f"dataset {dataset!r} is missing scores for {missing or extra}")
        ranks.append(rankdata([-scores[s] for s in strategies], method="average"))
    mean = np.mean(ranks, axis=0)
    return {s: float(r) for s, r in zip(strategies, mean)}


def render_rank_table(table: Mapping[str, Mapping[str, float]]) -> str:
    ranks = average_rank(table)
    strategies = list(ranks)
    name_w = max(len("dataset"), *(len(d) for d in table), len("avg rank"))
    col_w = [max(len(s), 8) for s in strategies]
    lines = ["  ".join(["dataset".ljust(name_w)] + [s.rjust(w) for s, w in zip(strategies, col_w)])]
    lines.append("-" * len(lines[0]))
    for dataset, scores in table.items():
        cells = [f"{scores[s]:.2f}".rjust(w) for s, w in zip(strategies, col_w)]
        lines.append("  ".join([dataset.ljust(name_w)] + cells))
    lines.append("-" * len(lines[0]))
    lines.append("  ".join(["avg rank".ljust(name_w)] + [f"{ranks[s]:.2f}".rjust(w) for s, w in zip(strategies, col_w)]))
    return "\n".join(lines) + "\n"


def read_score_table(path: str | Path) -> dict[str, dict[str, float]]:
    """Read ``dataset TAB strategy TAB score`` lines into a nested mapping."""
    table: dict[str, dict[str, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'dataset<TAB>strategy<TAB>score'")
            table.setdefault(parts[0], {})[parts[1]] = float(parts[2])
    return table
