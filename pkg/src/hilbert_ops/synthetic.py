"""Seeded generators for demo datasets and independent random streams."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .reasoning import EmbeddingStore, ReasoningTriple


def rng_stream(seed: int, consumer: str) -> np.random.Generator:
    """Generator for one named consumer of a command's seed.

    Streams are keyed by (seed, crc32(consumer)), so adding a new consumer
    never shifts the draws of an existing one.
    """
    key = zlib.crc32(consumer.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key,)))


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


@dataclass(frozen=True)
class AnalogyDataset:
    store: EmbeddingStore
    quadruples: list  # (a, b, c, answer) with f_answer ~ f_b - f_a + f_c


def analogy_store(
    rng: np.random.Generator,
    n_entities: int = 50,
    dim: int = 32,
    n_quadruples: int = 20,
    noise: float = 0.0,
    n_offsets: int = 5,
) -> AnalogyDataset:
    """Entities built as base + relation offset, with planted analogy quadruples.

    Half the entities are random bases; each partner equals its base plus
    one of ``n_offsets`` shared offsets. Any two (base, partner) pairs
    sharing an offset form a quadruple. Afterwards every coordinate of f
    receives Gaussian noise with standard deviation ``noise * ||f||``.
    """
    n_pairs = n_entities // 2
    bases = rng.standard_normal((n_pairs, dim))
    offsets = rng.standard_normal((n_offsets, dim))
    assign = np.arange(n_pairs) % n_offsets
    partners = bases + offsets[assign]
    vectors = {}
    for i in range(n_pairs):
        vectors[f"b{i:03d}"] = bases[i]
        vectors[f"p{i:03d}"] = partners[i]
    for i in range(2 * n_pairs, n_entities):
        vectors[f"x{i:03d}"] = rng.standard_normal(dim)
    candidates = []
    for r in range(n_offsets):
        members = np.flatnonzero(assign == r)
        for u in members:
            for v in members:
                if u != v:
                    candidates.append((f"b{u:03d}", f"p{u:03d}", f"b{v:03d}", f"p{v:03d}"))
    pick = rng.choice(len(candidates), size=min(n_quadruples, len(candidates)), replace=False)
    quads = [candidates[i] for i in sorted(pick)]
    if noise > 0:
        for key in sorted(vectors):
            v = vectors[key]
            vectors[key] = v + rng.standard_normal(dim) * noise * np.linalg.norm(v)
    return AnalogyDataset(EmbeddingStore(vectors), quads)


@dataclass(frozen=True)
class RelationDataset:
    store: EmbeddingStore
    triples: list
    planted: dict  # relation id -> true operator matrix
    chains: list  # (start, middle, end, first relation, second relation)


def relation_dataset(
    rng: np.random.Generator,
    dim: int = 8,
    n_subjects: int = 24,
    relations: tuple = ("r1", "r2"),
) -> RelationDataset:
    """Planted orthogonal relation maps applied to random subjects.

    Subjects s_i map to r1(s_i) = T1 s_i and on to T2 T1 s_i, giving exact
    two-hop chains. ``n_subjects >= dim`` makes every relation's data span
    the space.
    """
    planted = {r: random_orthogonal(dim, rng) for r in relations}
    vectors, triples, chains = {}, [], []
    for i in range(n_subjects):
        name = f"e{i:03d}"
        vectors[name] = rng.standard_normal(dim)
        current = name
        for r in relations:
            nxt = f"{current}.{r}"
            vectors[nxt] = planted[r] @ vectors[current]
            triples.append(ReasoningTriple(current, r, nxt))
            current = nxt
        if len(relations) >= 2:
            mid = f"{name}.{relations[0]}"
            chains.append((name, mid, f"{mid}.{relations[1]}", relations[0], relations[1]))
    return RelationDataset(EmbeddingStore(vectors), triples, planted, chains)


def bandlimited_signal(n: int, max_freq: int, rng: np.random.Generator) -> np.ndarray:
    """Real random trigonometric polynomial of degree ``max_freq`` on n samples."""
    x = np.arange(n) / n
    out = np.full(n, rng.standard_normal())
    for k in range(1, max_freq + 1):
        a, b = rng.standard_normal(2)
        out += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return out
