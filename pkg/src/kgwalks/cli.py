"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Sequence

from . import transforms
from .corpus import read_corpus, write_corpus
from .embedding import load_embeddings, save_embeddings
from .evaluation import (
    CLASSIFIER_NOTE,
    C_GRID,
    read_score_table,
    read_split,
    render_rank_table,
    repeat_runs,
)
from .pipeline import (
    STRATEGIES,
    PipelineConfig,
    StageError,
    apply_transform,
    evaluate_embeddings,
    extract_walks,
    load_graph,
    run_pipeline,
    select_roots,
    stage,
    train_embeddings,
)
from .rdf_graph import VertexKind, ingest_feature_network, read_feature_network, serialize_ntriples
from .wl import check_wl_bijection, dump_wl_labels, wl_relabel

OUT_DIR_ENV = "KGWALKS_OUT_DIR"

logger = logging.getLogger("kgwalks")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _default_out() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file with defaults for any flag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--deterministic", action="store_true", help="single worker everywhere")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_graph(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", type=Path, required=True, help="N-Triples file (optionally gzipped)")
    p.add_argument("--leak", type=Path, help="predicates to drop, one IRI per line")


def _add_extraction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--split", type=Path, help="entity<TAB>class<TAB>train|test; roots are its entities")
    p.add_argument("--roots", type=Path, help="root entity IRIs, one per line")
    p.add_argument("--strategy", choices=STRATEGIES, default="random")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--max-walks", type=int)
    p.add_argument("--partition", type=Path, help="cached partition for --strategy community")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--hop-prob", type=float, default=0.1)
    p.add_argument("--sample-prob", type=float, default=1.0)
    p.add_argument("--wl-iterations", type=int, default=4)
    p.add_argument("--relabel-root", action="store_true")
    p.add_argument("-n", "--ngram-n", type=int, default=2)
    p.add_argument("--wildcards", type=int, default=0)
    p.add_argument("--thresholds", type=_floats, default=transforms.HALK_THRESHOLDS)
    p.add_argument("--halk-mode", choices=("tune", "concat"), default="tune")


def _add_training(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=500)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--neg", dest="negatives", type=int, default=25)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", dest="learning_rate", type=float, default=0.025)
    p.add_argument("--min-lr", dest="min_learning_rate", type=float, default=1e-4)


def _add_classifier(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=_floats, default=C_GRID)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--repetitions", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgwalks", description="Knowledge-graph walk corpora and embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract a walk corpus")
    _add_common(p)
    _add_graph(p)
    _add_extraction(p)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("transform", help="apply one transform to a corpus")
    _add_common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--anonymous", dest="transform", action="store_const", const="anonymous")
    which.add_argument("--walklet", dest="transform", action="store_const", const="walklet")
    which.add_argument("--halk", dest="transform", action="store_const", const="halk")
    which.add_argument("--ngram", dest="transform", action="store_const", const="ngram")
    p.add_argument("-n", "--ngram-n", type=int)
    p.add_argument("--wildcards", type=int)
    p.add_argument("--thresholds", type=_floats)
    p.add_argument("--per-threshold", action="store_true",
                   help="write one corpus per HALK threshold (OUT gets a .t<threshold> suffix)")

    p = sub.add_parser("train", help="train skip-gram embeddings on a corpus")
    _add_common(p)
    _add_training(p)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("evaluate", help="node classification on trained embeddings")
    _add_common(p)
    _add_classifier(p)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--split", type=Path, required=True)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("wl-check", help="count entities that share a WL label")
    _add_common(p)
    _add_graph(p)
    p.add_argument("--iterations", type=int, default=4)
    p.add_argument("--include-blank", action="store_true", help="also compare blank nodes")
    p.add_argument("--dump", type=Path, help="write label TAB k TAB wl-label rows")

    p = sub.add_parser("pipeline", help="extract, train and evaluate in one go")
    _add_common(p)
    _add_graph(p)
    _add_extraction(p)
    _add_training(p)
    _add_classifier(p)
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--save-embeddings", choices=("first", "all", "none"), default="first")

    p = sub.add_parser("rank-table", help="average ranks from dataset TAB strategy TAB score rows")
    p.add_argument("scores", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("ingest-citations", help="citation network records to N-Triples")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config_argv(path: Path) -> list[str]:
    """Turn ``key = value`` lines into flags; explicit command-line flags still win."""
    argv: list[str] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            argv.append(flag)
        elif value.lower() in ("false", "no", "off", ""):
            continue
        else:
            argv += [flag, value]
    return argv


def _expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv or not argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = Path(argv[i + 1])
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return [argv[0]] + _config_argv(path) + argv[1:]


def _pipeline_config(args: argparse.Namespace, out_dir: Path) -> PipelineConfig:
    names = {f.name for f in fields(PipelineConfig)}
    values = {k: v for k, v in vars(args).items() if k in names}
    values["out_dir"] = out_dir
    return PipelineConfig(**values)


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _pipeline_config(args, args.out.parent)
    with stage("config"):
        cfg.validate()
    with stage("load"):
        g = load_graph(cfg.graph, cfg.leak)
        split = read_split(cfg.split) if cfg.split else None
        roots = select_roots(g, split, cfg.roots)
    with stage("extract"):
        if cfg.strategy == "halk" and cfg.halk_mode == "tune":
            logger.info("extract writes the concatenated HALK corpus; use transform --per-threshold to tune")
        corpus = extract_walks(g, roots, cfg)
        write_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} walks to {args.out}")
    return 0


def cmd_transform(args: argparse.Namespace) -> int:
    if args.transform != "ngram" and (args.ngram_n is not None or args.wildcards is not None):
        raise _UsageError("-n/--wildcards only apply to --ngram")
    if args.transform != "halk" and (args.thresholds is not None or args.per_threshold):
        raise _UsageError("--thresholds/--per-threshold only apply to --halk")
    with stage("load"):
        corpus = read_corpus(args.input)
    cfg = PipelineConfig(graph=Path("-"), ngram_n=args.ngram_n or 2, wildcards=args.wildcards or 0,
                         thresholds=args.thresholds or transforms.HALK_THRESHOLDS)
    with stage("transform"):
        if args.transform == "halk" and args.per_threshold:
            for t, part in transforms.halk_per_threshold(corpus, cfg.thresholds).items():
                path = args.out.with_name(f"{args.out.name}.t{t:g}")
                write_corpus(part, path)
                print(f"wrote {len(part)} walks to {path}")
            return 0
        out = apply_transform(corpus, args.transform, cfg)
        write_corpus(out, args.out)
    print(f"wrote {len(out)} walks to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    with stage("load"):
        corpus = read_corpus(args.corpus)
    cfg = PipelineConfig(graph=Path("-"), dim=args.dim, window=args.window, negatives=args.negatives,
                         epochs=args.epochs, learning_rate=args.learning_rate,
                         min_learning_rate=args.min_learning_rate, workers=args.workers,
                         deterministic=args.deterministic)
    with stage("train"):
        emb = train_embeddings(corpus, cfg.training_config(args.seed))
        save_embeddings(emb, args.out)
    print(f"wrote {len(emb.vocab)} x {emb.dimension} embeddings to {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    with stage("load"):
        emb = load_embeddings(args.embeddings)
        split = read_split(args.split)
    cfg = PipelineConfig(graph=Path("-"), grid=args.grid, folds=args.folds)

    def run(seed: int):
        acc, clf = evaluate_embeddings(emb, split, cfg, seed)
        return acc, {"seed": seed, "C": clf.C}

    with stage("evaluate"):
        report = repeat_runs(run, args.repetitions, args.seed,
                             metadata={"embedding_sha256": emb.metadata.get("sha256"),
                                       "classifier": CLASSIFIER_NOTE})
    text = report.to_text()
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_wl_check(args: argparse.Namespace) -> int:
    with stage("load"):
        g = load_graph(args.graph, args.leak)
    with stage("wl-check"):
        store = wl_relabel(g, args.iterations)
        kinds = [VertexKind.ENTITY] + ([VertexKind.BLANK] if args.include_blank else [])
        report = check_wl_bijection(g, store, kinds)
        if args.dump:
            dump_wl_labels(g, store, args.dump)
    print(f"vertices: {report.checked_vertices}")
    print(f"iterations: {report.iterations}")
    print(f"violations: {len(report.violations)}")
    for k, a, b in report.violations[:20]:
        print(f"  k={k}\t{g.labels[a]}\t{g.labels[b]}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    out_dir = args.out_dir if args.out_dir is not None else _default_out()
    cfg = _pipeline_config(args, out_dir)
    if cfg.split is None:
        raise _UsageError("pipeline needs --split")
    with stage("config"):
        cfg.validate()
    report = run_pipeline(cfg, args.save_embeddings)
    print(f"accuracy: {report.mean:.4f} +- {report.std:.4f} over {len(report.accuracies)} runs")
    print(f"report: {Path(out_dir) / 'report.json'} ({report.digest()[:16]})")
    return 0


def cmd_rank_table(args: argparse.Namespace) -> int:
    with stage("rank-table"):
        sys.stdout.write(render_rank_table(read_score_table(args.scores)))
    return 0


def cmd_ingest_citations(args: argparse.Namespace) -> int:
    with stage("ingest"):
        triples = ingest_feature_network(read_feature_network(args.input))
        args.out.write_bytes(serialize_ntriples(triples))
    print(f"wrote {len(triples)} triples to {args.out}")
    return 0


class _UsageError(Exception):
    pass


COMMANDS = {
    "extract": cmd_extract,
    "transform": cmd_transform,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "wl-check": cmd_wl_check,
    "pipeline": cmd_pipeline,
    "rank-table": cmd_rank_table,
    "ingest-citations": cmd_ingest_citations,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.error(str(exc))
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
