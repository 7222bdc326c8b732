"""Walk corpora and their on-disk format.

A corpus file is UTF-8 text with one walk per line and TAB-separated tokens.
The first line is a header of ``key=value`` pairs::

    # strategy=random depth=4 seed=0 sha256=<digest of the walk lines>

The ``sha256`` entry guards against edits to the body after writing.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

__all__ = ["WalkCorpus", "CorpusIntegrityError", "escape_token", "unescape_token",
           "corpus_digest", "format_corpus", "parse_corpus", "write_corpus", "read_corpus"]

Tokens = tuple[str, ...]


class CorpusIntegrityError(ValueError):
    """The recorded body digest does not match the walks in the file."""


@dataclass
class WalkCorpus:
    walks: list[Tokens]
    strategy: str = "random"
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        self.walks = [tuple(w) for w in self.walks]
        for w in self.walks:
            if not w:
                raise ValueError("walks must be non-empty")

    def __len__(self) -> int:
        return len(self.walks)

    def __iter__(self):
        return iter(self.walks)

    def derive(self, walks: Iterable[Sequence[str]], transform: str, **params: Any) -> "WalkCorpus":
        """New corpus from ``walks`` that records ``transform`` in its provenance."""
        chain = self.params.get("transforms", "")
        desc = transform
        if params:
            desc += "(" + ";".join(f"{k}:{_fmt(v)}" for k, v in params.items()) + ")"
        merged = dict(self.params)
        merged["transforms"] = f"{chain}|{desc}" if chain else desc
        return WalkCorpus(list(walks), self.strategy, merged, self.seed)

    def vocabulary(self) -> set[str]:
        return {t for w in self.walks for t in w}


def _fmt(value: Any) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


_ESC = {"\\": "\\\\", "\t": "\\t", "\n": "\\n"}
_UNESC = {"\\": "\\", "t": "\t", "n": "\n"}


def escape_token(token: str) -> str:
    if "\\" not in token and "\t" not in token and "\n" not in token:
        return token
    return "".join(_ESC.get(c, c) for c in token)


def unescape_token(token: str) -> str:
    if "\\" not in token:
        return token
    out = []
    it = iter(token)
    for c in it:
        if c == "\\":
            nxt = next(it, None)
            if nxt not in _UNESC:
                raise ValueError(f"bad escape in token {token!r}")
            out.append(_UNESC[nxt])
        else:
            out.append(c)
    return "".join(out)


def _body(walks: Iterable[Tokens]) -> str:
    return "".join("\t".join(escape_token(t) for t in w) + "\n" for w in walks)


def format_corpus(corpus: WalkCorpus) -> str:
    body = _body(corpus.walks)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    fields = {"strategy": corpus.strategy, **corpus.params, "seed": corpus.seed, "sha256": digest}
    for k, v in fields.items():
        text = _fmt(v)
        if any(c.isspace() for c in text) or "=" in k:
            raise ValueError(f"header value for {k!r} must not contain whitespace: {text!r}")
    header = "# " + " ".join(f"{k}={_fmt(v)}" for k, v in fields.items())
    return header + "\n" + body


# header values that must stay text even when they look numeric
_TEXT_KEYS = {"transforms", "config"}


def _coerce(text: str) -> Any:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_corpus(text: str, *, verify: bool = True) -> WalkCorpus:
    lines = text.split("\n")
    if not lines or not lines[0].startswith("#"):
        raise ValueError("corpus file lacks a '#' header line")
    header: dict[str, Any] = {}
    for item in lines[0][1:].split():
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed header entry {item!r}")
        header[key] = value
    body_lines = lines[1:]
    if body_lines and body_lines[-1] == "":
        body_lines.pop()
    if verify and "sha256" in header:
        body = "".join(line + "\n" for line in body_lines)
        if hashlib.sha256(body.encode("utf-8")).hexdigest() != header["sha256"]:
            raise CorpusIntegrityError("corpus body does not match its recorded sha256")
    walks = [tuple(unescape_token(t) for t in line.split("\t")) for line in body_lines]
    strategy = header.pop("strategy", "unknown")
    seed = int(header.pop("seed", 0))
    header.pop("sha256", None)
    params = {k: (v if k in _TEXT_KEYS else _coerce(v)) for k, v in header.items()}
    return WalkCorpus(walks, strategy, params, seed)


def corpus_digest(corpus: WalkCorpus) -> str:
    return hashlib.sha256(_body(corpus.walks).encode("utf-8")).hexdigest()


def write_corpus(corpus: WalkCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_corpus(corpus))


def read_corpus(path: str | Path, *, verify: bool = True) -> WalkCorpus:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_corpus(fh.read(), verify=verify)
