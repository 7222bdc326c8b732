"""RDF ingestion and the triple-expanded knowledge graph.

Every ``(s, p, o)`` triple becomes three labelled vertices and two unlabelled
edges ``s -> p -> o``. Entities and blank nodes are shared between triples;
each triple gets its own predicate vertex, and literal objects get their own
vertex per occurrence.
"""

from __future__ import annotations

import enum
import gzip
import hashlib
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, NamedTuple, Sequence

__all__ = [
    "TermKind",
    "Term",
    "Triple",
    "VertexKind",
    "Vertex",
    "KnowledgeGraph",
    "NTriplesError",
    "iri",
    "bnode",
    "literal",
    "parse_ntriples",
    "read_ntriples",
    "serialize_ntriples",
    "build_graph",
    "out_neighbours",
    "in_neighbours",
    "remove_leak_triples",
    "read_predicate_list",
    "ingest_feature_network",
    "read_feature_network",
]


class TermKind(enum.Enum):
    IRI = "iri"
    BLANK = "blank"
    LITERAL = "literal"


class Term(NamedTuple):
    kind: TermKind
    value: str
    # "@lang" or "^^<datatype>" for literals, empty otherwise
    suffix: str = ""

    @property
    def label(self) -> str:
        if self.kind is TermKind.BLANK:
            return "_:" + self.value
        return self.value + self.suffix


def iri(value: str) -> Term:
    return Term(TermKind.IRI, value)


def bnode(value: str) -> Term:
    return Term(TermKind.BLANK, value)


def literal(value: str, suffix: str = "") -> Term:
    return Term(TermKind.LITERAL, value, suffix)


class Triple(NamedTuple):
    subject: Term
    predicate: str
    object: Term


class NTriplesError(ValueError):
    """Raised for a line that is not a valid N-Triples statement."""

    def __init__(self, lineno: int, text: str, reason: str = "malformed statement"):
        self.lineno = lineno
        self.text = text
        super().__init__(f"line {lineno}: {reason}: {text!r}")


# --------------------------------------------------------------------------
# N-Triples parsing
# --------------------------------------------------------------------------

_IRI = r'<((?:[^<>"{}|^`\\\x00-\x20]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*)>'
_BNODE = r"_:([A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)"
_LITERAL = r'"((?:[^"\\\n\r]|\\.)*)"(@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^' + _IRI + r")?"

_STATEMENT = re.compile(
    r"^[ \t]*(?:" + _IRI + "|" + _BNODE + ")"
    r"[ \t]+" + _IRI + r"[ \t]+"
    r"(?:" + _IRI + "|" + _BNODE + "|" + _LITERAL + r")"
    r"[ \t]*\.[ \t]*(?:#.*)?$"
)

_ESCAPE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))")
_SIMPLE_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text: str) -> str:
    if "\\" not in text:
        return text

    def sub(m: re.Match) -> str:
        if m.group(1) or m.group(2):
            return chr(int(m.group(1) or m.group(2), 16))
        ch = m.group(3)
        if ch not in _SIMPLE_ESCAPES:
            raise ValueError(f"invalid escape \\{ch}")
        return _SIMPLE_ESCAPES[ch]

    return _ESCAPE.sub(sub, text)


def _parse_line(lineno: int, line: str) -> Triple:
    m = _STATEMENT.match(line)
    if m is None:
        if line.lstrip().startswith('"'):
            raise NTriplesError(lineno, line, "literal in subject position")
        raise NTriplesError(lineno, line)
    # s_iri, s_bnode, p_iri, o_iri, o_bnode, o_lexical, o_suffix, o_datatype
    g = m.groups()
    try:
        subject = iri(_unescape(g[0])) if g[0] is not None else bnode(g[1])
        predicate = _unescape(g[2])
        if g[3] is not None:
            obj = iri(_unescape(g[3]))
        elif g[4] is not None:
            obj = bnode(g[4])
        else:
            suffix = g[6] or ""
            if g[7] is not None:
                suffix = "^^<" + _unescape(g[7]) + ">"
            obj = literal(_unescape(g[5]), suffix)
    except ValueError as exc:
        raise NTriplesError(lineno, line, str(exc)) from None
    return Triple(subject, predicate, obj)


def _iter_lines(source: BinaryIO | bytes | Iterable[bytes]) -> Iterator[bytes]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if hasattr(source, "read"):
        if not hasattr(source, "peek"):
            source = io.BufferedReader(source)
        if source.peek(2)[:2] == b"\x1f\x8b":
            source = gzip.GzipFile(fileobj=source)
    yield from source


def parse_ntriples(source: BinaryIO | bytes | Iterable[bytes]) -> list[Triple]:
    """Parse an N-Triples byte stream (optionally gzip-compressed).

    Comment lines and blank lines are skipped. Errors carry the 1-based line
    number and the offending text.
    """
    triples = []
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        try:
            line = raw.decode("utf-8").rstrip("\r\n")
        except UnicodeDecodeError:
            raise NTriplesError(lineno, raw.decode("utf-8", "replace"), "invalid UTF-8") from None
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(_parse_line(lineno, line))
    return triples


def read_ntriples(path: str | Path) -> list[Triple]:
    with open(path, "rb") as fh:
        return parse_ntriples(fh)


def _escape_iri(value: str) -> str:
    return "".join(
        f"\\u{ord(c):04X}" if c in '<>"{}|^`\\' or ord(c) <= 0x20 else c for c in value
    )


def _escape_literal(value: str) -> str:
    return (
        value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r")
    )


def _render_term(term: Term) -> str:
    if term.kind is TermKind.IRI:
        return f"<{_escape_iri(term.value)}>"
    if term.kind is TermKind.BLANK:
        return f"_:{term.value}"
    suffix = term.suffix
    if suffix.startswith("^^<"):
        suffix = "^^<" + _escape_iri(suffix[3:-1]) + ">"
    return f'"{_escape_literal(term.value)}"{suffix}'


def serialize_ntriples(triples: Iterable[Triple]) -> bytes:
    lines = [
        f"{_render_term(t.subject)} <{_escape_iri(t.predicate)}> {_render_term(t.object)} .\n"
        for t in triples
    ]
    return "".join(lines).encode("utf-8")


# --------------------------------------------------------------------------
# Expanded graph
# --------------------------------------------------------------------------


class VertexKind(enum.Enum):
    ENTITY = "entity"
    BLANK = "blank"
    LITERAL = "literal"
    PREDICATE = "predicate"


_TERM_TO_VERTEX = {
    TermKind.IRI: VertexKind.ENTITY,
    TermKind.BLANK: VertexKind.BLANK,
    TermKind.LITERAL: VertexKind.LITERAL,
}


class Vertex(NamedTuple):
    id: int
    label: str
    kind: VertexKind


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable triple-expanded graph with forward and reverse adjacency."""

    labels: tuple[str, ...]
    kinds: tuple[VertexKind, ...]
    out_edges: tuple[tuple[int, ...], ...]
    in_edges: tuple[tuple[int, ...], ...]
    label_index: dict[tuple[VertexKind, str], int]

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return sum(len(o) for o in self.out_edges)

    def vertex(self, v: int) -> Vertex:
        self._check(v)
        return Vertex(v, self.labels[v], self.kinds[v])

    def vertices(self) -> Iterator[Vertex]:
        for v in range(len(self.labels)):
            yield Vertex(v, self.labels[v], self.kinds[v])

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, targets in enumerate(self.out_edges):
            for v in targets:
                yield u, v

    def entity(self, label: str) -> int:
        """Vertex id of the entity with IRI ``label``."""
        try:
            return self.label_index[(VertexKind.ENTITY, label)]
        except KeyError:
            raise KeyError(f"unknown entity {label!r}") from None

    def entities(self) -> list[int]:
        return [v for v, k in enumerate(self.kinds) if k is VertexKind.ENTITY]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for label, kind, targets in zip(self.labels, self.kinds, self.out_edges):
            h.update(kind.value.encode())
            h.update(b"\x00")
            h.update(label.encode("utf-8"))
            h.update(b"\x00")
            h.update(",".join(map(str, targets)).encode())
            h.update(b"\n")
        return h.hexdigest()

    def _check(self, v: int) -> None:
        if not 0 <= v < len(self.labels):
            raise IndexError(f"unknown vertex id {v}")


def build_graph(triples: Iterable[Triple]) -> KnowledgeGraph:
    """Expand triples into a :class:`KnowledgeGraph`.

    Exact duplicate triples are collapsed before expansion.
    """
    labels: list[str] = []
    kinds: list[VertexKind] = []
    out_edges: list[list[int]] = []
    in_edges: list[list[int]] = []
    index: dict[tuple[VertexKind, str], int] = {}

    def add(label: str, kind: VertexKind) -> int:
        labels.append(label)
        kinds.append(kind)
        out_edges.append([])
        in_edges.append([])
        return len(labels) - 1

    def shared(term: Term) -> int:
        kind = _TERM_TO_VERTEX[term.kind]
        key = (kind, term.label)
        v = index.get(key)
        if v is None:
            v = index[key] = add(term.label, kind)
        return v

    def link(u: int, v: int) -> None:
        out_edges[u].append(v)
        in_edges[v].append(u)

    for t in dict.fromkeys(triples):
        if t.subject.kind is TermKind.LITERAL:
            raise ValueError(f"literal in subject position: {t}")
        s = shared(t.subject)
        p = add(t.predicate, VertexKind.PREDICATE)
        if t.object.kind is TermKind.LITERAL:
            o = add(t.object.label, VertexKind.LITERAL)
        else:
            o = shared(t.object)
        link(s, p)
        link(p, o)

    return KnowledgeGraph(
        labels=tuple(labels),
        kinds=tuple(kinds),
        out_edges=tuple(map(tuple, out_edges)),
        in_edges=tuple(map(tuple, in_edges)),
        label_index=index,
    )


def out_neighbours(g: KnowledgeGraph, v: int) -> tuple[int, ...]:
    g._check(v)
    return g.out_edges[v]


def in_neighbours(g: KnowledgeGraph, v: int) -> frozenset[int]:
    g._check(v)
    return frozenset(g.in_edges[v])


def remove_leak_triples(triples: Iterable[Triple], banned_predicates: Iterable[str]) -> list[Triple]:
    banned = set(banned_predicates)
    return [t for t in triples if t.predicate not in banned]


def read_predicate_list(path: str | Path) -> list[str]:
    """One IRI per line; angle brackets optional, ``#`` comments allowed."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("<") and line.endswith(">"):
            line = line[1:-1]
        out.append(line)
    return out


# --------------------------------------------------------------------------
# Citation networks
# --------------------------------------------------------------------------

HAS_WORD = "http://example.org/citation#hasWord"
CITES = "http://example.org/citation#cites"
PAPER_NS = "http://example.org/paper/"
WORD_NS = "http://example.org/word/"


def ingest_feature_network(
    papers: Iterable[tuple[str, dict[str, float], Sequence[str]]],
    *,
    has_word: str = HAS_WORD,
    cites: str = CITES,
    paper_ns: str = PAPER_NS,
    word_ns: str = WORD_NS,
) -> list[Triple]:
    """Turn ``(paper, word weights, cited papers)`` records into triples.

    A ``hasWord`` triple is emitted for every strictly positive weight and a
    ``cites`` triple for every citation.
    """
    triples = []
    for paper, weights, cited in papers:
        p = iri(paper_ns + paper)
        for word, weight in weights.items():
            if weight < 0:
                raise ValueError(f"negative weight for word {word!r} of paper {paper!r}")
            if weight > 0:
                triples.append(Triple(p, has_word, iri(word_ns + word)))
        for q in cited:
            triples.append(Triple(p, cites, iri(paper_ns + q)))
    return triples


def read_feature_network(path: str | Path) -> list[tuple[str, dict[str, float], list[str]]]:
    """Read ``paper TAB word:weight,... TAB cited,...`` records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            paper, words, cited = parts
            weights = {}
            for pair in filter(None, words.split(",")):
                word, _, weight = pair.rpartition(":")
                if not word:
                    raise ValueError(f"line {lineno}: bad word:weight pair {pair!r}")
                weights[word] = float(weight)
            records.append((paper, weights, [c for c in cited.split(",") if c]))
    return records
