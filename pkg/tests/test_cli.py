import json

import pytest

from helpers import write_toy_dataset
from kgwalks.cli import main
from kgwalks.corpus import WalkCorpus, read_corpus, write_corpus

FAST = ["--dim", "16", "--epochs", "3", "--neg", "5"]


@pytest.fixture
def toy(tmp_path):
    graph, split, leak = write_toy_dataset(tmp_path)
    return tmp_path, graph, split, leak


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_error(argv):
    with pytest.raises(SystemExit) as exc:
        main([str(a) for a in argv])
    return exc.value.code


def test_extract_random_records_depth(toy, capsys):
    d, graph, split, leak = toy
    out = d / "c.tsv"
    code, stdout, _ = run(["extract", "--graph", graph, "--split", split, "--leak", leak,
                           "--strategy", "random", "--depth", "4", "--out", out], capsys)
    assert code == 0 and "walks" in stdout
    header = out.read_text().splitlines()[0]
    assert "strategy=random" in header and "depth=4" in header and "config=" in header
    corpus = read_corpus(out)
    assert max(map(len, corpus)) == 5
    assert all(not w[0].endswith("/label") for w in corpus)


def test_extract_community_caches_partition(toy, capsys):
    d, graph, split, leak = toy
    argv = ["extract", "--graph", graph, "--split", split, "--strategy", "community", "--out", d / "c.tsv"]
    assert run(argv, capsys)[0] == 0
    [cache] = list(d.glob("partition-*-r1.txt"))
    stamp = cache.stat().st_mtime_ns
    first = (d / "c.tsv").read_bytes()
    assert run(argv, capsys)[0] == 0
    assert cache.stat().st_mtime_ns == stamp
    assert (d / "c.tsv").read_bytes() == first


def test_extract_with_given_partition_for_other_graph_fails(toy, capsys):
    d, graph, split, leak = toy
    run(["extract", "--graph", graph, "--strategy", "community", "--out", d / "c.tsv"], capsys)
    [cache] = list(d.glob("partition-*-r1.txt"))
    code, _, err = run(["extract", "--graph", graph, "--leak", leak, "--strategy", "community",
                        "--partition", cache, "--out", d / "c2.tsv"], capsys)
    assert code == 1 and "extract:" in err and "different graph" in err


def test_unknown_strategy_is_usage_error(toy):
    d, graph, _, _ = toy
    assert usage_error(["extract", "--graph", graph, "--strategy", "bogus", "--out", d / "x"]) == 2


def test_missing_input_is_runtime_error(toy, capsys):
    d, _, _, _ = toy
    code, _, err = run(["extract", "--graph", d / "nope.nt", "--out", d / "x"], capsys)
    assert code == 1 and err.startswith("error: config:")


def test_malformed_graph_reports_stage_and_line(toy, capsys):
    d, _, _, _ = toy
    bad = d / "bad.nt"
    bad.write_text("<http://a> <http://p> <http://b> .\n<http://a> <http://p>\n")
    code, _, err = run(["wl-check", "--graph", bad], capsys)
    assert code == 1 and "load:" in err and "line 2" in err


@pytest.fixture
def corpus_file(toy, capsys):
    d, graph, split, leak = toy
    out = d / "r.tsv"
    run(["extract", "--graph", graph, "--split", split, "--leak", leak, "--out", out], capsys)
    return out


def test_transform_halk_zero_keeps_walks(corpus_file, capsys):
    out = corpus_file.with_name("h.tsv")
    code, _, _ = run(["transform", "--input", corpus_file, "--out", out, "--halk", "--thresholds", "0.0"], capsys)
    assert code == 0
    before, after = corpus_file.read_bytes().split(b"\n", 1), out.read_bytes().split(b"\n", 1)
    assert before[1] == after[1]
    assert b"transforms=halk(thresholds:0.0)" in after[0]


def test_transform_ngram_with_wildcards(corpus_file, capsys):
    out = corpus_file.with_name("n.tsv")
    code, _, _ = run(["transform", "--input", corpus_file, "--out", out, "--ngram", "-n", "2", "--wildcards", "1"],
                     capsys)
    assert code == 0
    corpus = read_corpus(out)
    assert corpus.params["transforms"] == "ngram(n:2;wildcards:1)"
    assert len(corpus) > len(read_corpus(corpus_file))


def test_transform_per_threshold(corpus_file, capsys):
    out = corpus_file.with_name("h.tsv")
    code, _, _ = run(["transform", "--input", corpus_file, "--out", out, "--halk", "--thresholds", "0.0,0.5",
                      "--per-threshold"], capsys)
    assert code == 0
    assert read_corpus(out.with_name("h.tsv.t0")).walks == read_corpus(corpus_file).walks
    assert out.with_name("h.tsv.t0.5").exists()


def test_transform_anonymous_on_empty_corpus(tmp_path, capsys):
    src, out = tmp_path / "empty.tsv", tmp_path / "out.tsv"
    write_corpus(WalkCorpus([], "random", {"depth": 4}), src)
    code, _, _ = run(["transform", "--input", src, "--out", out, "--anonymous"], capsys)
    assert code == 0 and read_corpus(out).walks == []


def test_transform_param_mismatch_is_usage_error(corpus_file):
    out = corpus_file.with_name("x.tsv")
    assert usage_error(["transform", "--input", corpus_file, "--out", out, "--anonymous", "-n", "2"]) == 2
    assert usage_error(["transform", "--input", corpus_file, "--out", out, "--ngram", "--thresholds", "0.1"]) == 2
    assert usage_error(["transform", "--input", corpus_file, "--out", out, "--ngram", "--halk"]) == 2
    assert usage_error(["transform", "--input", corpus_file, "--out", out]) == 2


def test_transform_rejects_tampered_input(corpus_file, capsys):
    text = corpus_file.read_text().splitlines()
    text[1] = text[1] + "\textra"
    corpus_file.write_text("\n".join(text) + "\n")
    code, _, err = run(["transform", "--input", corpus_file, "--out", corpus_file.with_name("x"), "--walklet"],
                       capsys)
    assert code == 1 and "load:" in err and "sha256" in err


def test_train_then_evaluate(toy, corpus_file, capsys):
    d, _, split, _ = toy
    emb = d / "e.txt"
    code, _, _ = run(["train", "--corpus", corpus_file, "--out", emb, "--deterministic", "--seed", "1"] + FAST, capsys)
    assert code == 0 and (d / "e.txt.meta").exists()
    meta = json.loads((d / "e.txt.meta").read_text())
    assert meta["mode"] == "deterministic" and meta["corpus"]["depth"] == 4
    report = d / "report.json"
    code, stdout, _ = run(["evaluate", "--embeddings", emb, "--split", split, "--repetitions", "2",
                           "--out", report], capsys)
    assert code == 0
    data = json.loads(report.read_text())
    assert len(data["accuracies"]) == 2 and data["metadata"]["embedding_sha256"] == meta["sha256"]
    assert json.loads(stdout) == data


def test_evaluate_rejects_tampered_embeddings(toy, corpus_file, capsys):
    d, _, split, _ = toy
    emb = d / "e.txt"
    run(["train", "--corpus", corpus_file, "--out", emb] + FAST, capsys)
    lines = emb.read_text().splitlines()
    lines[1] = lines[1].split("\t")[0] + "\t" + " ".join(["0"] * 16)
    emb.write_text("\n".join(lines) + "\n")
    code, _, err = run(["evaluate", "--embeddings", emb, "--split", split], capsys)
    assert code == 1 and "load:" in err


def test_wl_check_reports_zero_violations(toy, capsys):
    _, graph, _, leak = toy
    code, stdout, _ = run(["wl-check", "--graph", graph, "--leak", leak, "--iterations", "4"], capsys)
    assert code == 0
    assert "violations: 0" in stdout.splitlines()


def test_wl_check_dump(toy, capsys):
    d, graph, _, _ = toy
    code, _, _ = run(["wl-check", "--graph", graph, "--iterations", "2", "--dump", d / "wl.tsv"], capsys)
    assert code == 0 and (d / "wl.tsv").read_text().count("\n") > 0


def test_pipeline_writes_artifacts(toy, capsys):
    d, graph, split, leak = toy
    out = d / "run"
    code, stdout, _ = run(["pipeline", "--graph", graph, "--split", split, "--leak", leak, "--strategy", "walklet",
                           "--repetitions", "2", "--deterministic", "--out-dir", out] + FAST, capsys)
    assert code == 0 and "accuracy:" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["metadata"]["strategy"] == "walklet"
    assert report["metadata"]["mode"] == "deterministic"
    assert "logistic regression" in report["classifier"]
    assert read_corpus(out / "corpus.tsv").params["transforms"] == "walklet"


def test_pipeline_out_dir_from_environment(toy, capsys, monkeypatch):
    d, graph, split, leak = toy
    monkeypatch.setenv("KGWALKS_OUT_DIR", str(d / "envout"))
    code, _, _ = run(["pipeline", "--graph", graph, "--split", split, "--repetitions", "1", "--deterministic"]
                     + FAST, capsys)
    assert code == 0 and (d / "envout" / "report.json").exists()


def test_pipeline_needs_split(toy):
    d, graph, _, _ = toy
    assert usage_error(["pipeline", "--graph", graph, "--out-dir", d]) == 2


def test_pipeline_seed_changes_results(toy, capsys):
    d, graph, split, leak = toy
    base = ["pipeline", "--graph", graph, "--split", split, "--leak", leak, "--repetitions", "1",
            "--deterministic", "--max-walks", "3"] + FAST
    run(base + ["--seed", "1", "--out-dir", d / "a"], capsys)
    run(base + ["--seed", "2", "--out-dir", d / "b"], capsys)
    assert (d / "a" / "embeddings.txt").read_bytes() != (d / "b" / "embeddings.txt").read_bytes()


def test_config_file_supplies_flags(toy, capsys):
    d, graph, split, leak = toy
    cfg = d / "run.cfg"
    cfg.write_text(f"# experiment\ngraph = {graph}\nsplit = {split}\nleak = {leak}\ndepth = 2\n"
                   f"strategy = anonymous\ndeterministic = true\n")
    out = d / "c.tsv"
    code, _, _ = run(["extract", "--config", cfg, "--out", out, "--depth", "4"], capsys)
    assert code == 0
    corpus = read_corpus(out)
    # the explicit --depth wins over the file
    assert corpus.params["depth"] == 4 and corpus.params["transforms"] == "anonymous"


def test_bad_config_file_is_usage_error(toy):
    d, _, _, _ = toy
    cfg = d / "bad.cfg"
    cfg.write_text("just words\n")
    assert usage_error(["extract", "--config", cfg, "--out", d / "x"]) == 2
    assert usage_error(["extract", "--config", d / "missing.cfg", "--out", d / "x"]) == 2


def test_rank_table_command(tmp_path, capsys):
    path = tmp_path / "scores.tsv"
    path.write_text("d1\ta\t0.9\nd1\tb\t0.8\n")
    code, stdout, _ = run(["rank-table", path], capsys)
    assert code == 0 and stdout.splitlines()[-1].split() == ["avg", "rank", "1.00", "2.00"]


def test_ingest_citations_command(tmp_path, capsys):
    src, out = tmp_path / "net.tsv", tmp_path / "net.nt"
    src.write_text("p1\tw1:0.5,w2:0\tp2\np2\tw2:1\tp1\n")
    code, _, _ = run(["ingest-citations", "--input", src, "--out", out], capsys)
    assert code == 0
    assert len(out.read_text().splitlines()) == 4
