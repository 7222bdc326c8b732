import pytest
from hypothesis import given, settings, strategies as st

from kgwalks.corpus import (
    CorpusIntegrityError,
    WalkCorpus,
    escape_token,
    format_corpus,
    parse_corpus,
    read_corpus,
    unescape_token,
    write_corpus,
)

tokens = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=12)
walks = st.lists(st.lists(tokens, min_size=1, max_size=6), max_size=10)


@given(tokens)
def test_escape_round_trip(tok):
    esc = escape_token(tok)
    assert "\t" not in esc and "\n" not in esc
    assert unescape_token(esc) == tok


@settings(max_examples=60)
@given(walks, st.integers(0, 2**63))
def test_format_parse_round_trip(ws, seed):
    c = WalkCorpus(ws, "random", {"depth": 4, "config": "0123456789abcdef"}, seed)
    back = parse_corpus(format_corpus(c))
    assert back.walks == c.walks
    assert back.seed == seed and back.strategy == "random"
    assert back.params == {"depth": 4, "config": "0123456789abcdef"}


def test_numeric_looking_fingerprint_stays_text():
    c = WalkCorpus([("a",)], params={"config": "0000000000000001"})
    assert parse_corpus(format_corpus(c)).params["config"] == "0000000000000001"


def test_header_records_depth_and_seed():
    text = format_corpus(WalkCorpus([("a", "b")], "random", {"depth": 4}, 7))
    header = text.splitlines()[0]
    assert header.startswith("# strategy=random depth=4 seed=7 sha256=")


def test_tampered_body_rejected(tmp_path):
    path = tmp_path / "c.tsv"
    write_corpus(WalkCorpus([("a", "b"), ("c",)]), path)
    path.write_text(path.read_text().replace("c\n", "d\n"))
    with pytest.raises(CorpusIntegrityError):
        read_corpus(path)
    assert read_corpus(path, verify=False).walks[1] == ("d",)


def test_carriage_return_tokens_survive_file(tmp_path):
    path = tmp_path / "c.tsv"
    write_corpus(WalkCorpus([("a\r", "b")]), path)
    assert read_corpus(path).walks == [("a\r", "b")]


def test_missing_header_rejected():
    with pytest.raises(ValueError):
        parse_corpus("a\tb\n")


def test_empty_walk_rejected():
    with pytest.raises(ValueError):
        WalkCorpus([()])


def test_whitespace_in_header_value_rejected():
    with pytest.raises(ValueError):
        format_corpus(WalkCorpus([("a",)], params={"note": "two words"}))


def test_derive_extends_chain():
    c = WalkCorpus([("a",)], "random", {"depth": 4}, 1)
    d = c.derive([("x",)], "halk", thresholds=[0.0, 0.1]).derive([("y",)], "anonymous")
    assert d.params["transforms"] == "halk(thresholds:0.0,0.1)|anonymous"
    assert d.params["depth"] == 4 and d.seed == 1 and d.strategy == "random"
    assert "transforms" not in c.params
