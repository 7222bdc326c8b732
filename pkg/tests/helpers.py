"""Graph builders shared by the tests."""

import random

from kgwalks.rdf_graph import Triple, bnode, build_graph, iri, literal

EX = "http://ex.org/"


def T(s, p, o):
    """Shorthand triple: plain strings become IRIs under the example namespace."""
    def term(x):
        return iri(EX + x) if isinstance(x, str) else x
    return Triple(term(s), EX + p, term(o))


def random_triples(rng: random.Random, n_entities: int, n_triples: int,
                   n_predicates: int = 3, blank_frac: float = 0.1, literal_frac: float = 0.2):
    """Random triples over unique entity IRIs, some blank nodes and literals."""
    ents = [iri(f"{EX}e{i}") for i in range(n_entities)]
    blanks = [bnode(f"b{i}") for i in range(max(1, n_entities // 10))]
    preds = [f"{EX}p{i}" for i in range(n_predicates)]
    triples = []
    for _ in range(n_triples):
        s = rng.choice(blanks) if rng.random() < blank_frac else rng.choice(ents)
        r = rng.random()
        if r < literal_frac:
            o = literal(f"v{rng.randrange(4)}", rng.choice(["", "@en"]))
        elif r < literal_frac + blank_frac:
            o = rng.choice(blanks)
        else:
            o = rng.choice(ents)
        triples.append(Triple(s, rng.choice(preds), o))
    return triples


def random_graph(seed: int, max_vertices: int = 200):
    """Random expanded graph with at most ``max_vertices`` vertices."""
    rng = random.Random(seed)
    # every triple adds at most 3 vertices (fresh predicate, fresh literal or new entity, subject)
    n_triples = rng.randint(1, max(1, (max_vertices - 2) // 3))
    n_entities = rng.randint(1, max(1, n_triples))
    g = build_graph(random_triples(rng, n_entities, n_triples))
    assert len(g) <= max_vertices
    return g


def write_toy_dataset(directory, n_entities=40, seed=0):
    """Two-class toy KG where the class shows in the neighbourhood, plus split and leak files.

    Returns ``(graph, split, leak)`` paths.
    """
    rng = random.Random(seed)
    lines, split = [], []
    for i in range(n_entities):
        cls = "A" if i % 2 == 0 else "B"
        e = f"<{EX}e{i}>"
        for _ in range(3):
            rel = "likes" if cls == "A" else "hates"
            lines.append(f"{e} <{EX}{rel}> <{EX}{cls}thing{rng.randrange(5)}> .")
        lines.append(f"{e} <{EX}knows> <{EX}e{rng.randrange(n_entities)}> .")
        lines.append(f'{e} <{EX}name> "n{i}"@en .')
        lines.append(f"{e} <{EX}label> <{EX}{cls}> .")
        which = "train" if i < int(0.7 * n_entities) else "test"
        split.append(f"{EX}e{i}\t{cls}\t{which}")
    graph = directory / "graph.nt"
    graph.write_text("\n".join(lines) + "\n", encoding="utf-8")
    split_path = directory / "split.tsv"
    split_path.write_text("\n".join(split) + "\n", encoding="utf-8")
    leak = directory / "leak.txt"
    leak.write_text(f"{EX}label\n", encoding="utf-8")
    return graph, split_path, leak
