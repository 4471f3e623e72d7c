"""Reasoning as operator manipulation on entity embeddings."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConformabilityError, PreconditionError
from .kernels import KernelDescriptor, eval_kernel
from .operator_learning import OperatorMatrix, apply_operator, fit_operator_ridge, hs_norm, ridge_objective


class UnknownEntityError(PreconditionError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


@dataclass(frozen=True, eq=False)
class EmbeddingStore:
    """Entity id -> embedding vector, all of one dimension."""

    entities: Mapping[str, np.ndarray]

    def __post_init__(self):
        frozen = {}
        dim = None
        for key, vec in self.entities.items():
            v = np.array(vec, dtype=float, copy=True)
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise PreconditionError(f"embedding for {key!r} must be a finite 1-D vector")
            if dim is None:
                dim = v.shape[0]
            elif v.shape[0] != dim:
                raise ConformabilityError(f"embedding for {key!r} has dimension {v.shape[0]}, expected {dim}")
            v.setflags(write=False)
            frozen[str(key)] = v
        object.__setattr__(self, "entities", frozen)

    @property
    def dim(self) -> int:
        return next(iter(self.entities.values())).shape[0] if self.entities else 0

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self.entities[key]
        except KeyError:
            raise UnknownEntityError(f"unknown entity id {key!r}") from None

    def __contains__(self, key) -> bool:
        return key in self.entities

    def __len__(self):
        return len(self.entities)

    def ids(self) -> list[str]:
        return sorted(self.entities)

    def to_dict(self) -> dict:
        return {k: self.entities[k].tolist() for k in self.ids()}


@dataclass(frozen=True, eq=False)
class RelationOperator:
    relation: str
    T: OperatorMatrix
    lam: float | None = None

    def __post_init__(self):
        if self.T.shape[0] != self.T.shape[1]:
            raise ConformabilityError(f"relation operator must be square, got {self.T.shape}")

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    def __call__(self, f) -> np.ndarray:
        return apply_operator(self.T, np.asarray(f))

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "lambda": self.lam,
            "dim": self.dim,
            "entries": self.T.entries.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RelationOperator":
        E = np.asarray(d["entries"], dtype=float).reshape(d["dim"], d["dim"])
        return cls(d["relation"], OperatorMatrix(E, "embedding", "embedding"), d.get("lambda"))


@dataclass(frozen=True)
class ReasoningTriple:
    subject: str
    relation: str
    object: str


def fit_relation(pairs: Sequence[tuple], lam: float, relation: str = "r") -> RelationOperator:
    """Ridge fit of T with T f_subject ~ f_object over the given pairs."""
    pairs = list(pairs)
    if not pairs:
        raise PreconditionError("fit_relation needs at least one (subject, object) pair")
    A = np.vstack([np.asarray(a, dtype=float) for a, _ in pairs])
    B = np.vstack([np.asarray(b, dtype=float) for _, b in pairs])
    if A.shape[1] != B.shape[1]:
        raise ConformabilityError(f"subject dimension {A.shape[1]} differs from object dimension {B.shape[1]}")
    T = fit_operator_ridge(A, B, lam)
    return RelationOperator(relation, OperatorMatrix(T.entries, "embedding", "embedding"), float(lam))


def compose(first: RelationOperator, second: RelationOperator) -> RelationOperator:
    """Apply ``first`` then ``second``: the matrix second.T @ first.T."""
    if first.dim != second.dim:
        raise ConformabilityError(f"cannot compose relations of dimension {first.dim} and {second.dim}")
    return RelationOperator(f"{first.relation}>{second.relation}", second.T @ first.T)


def spectral_modulate(c, gamma) -> np.ndarray:
    """Relation-specific per-mode modulation, sum_k gamma_k c_k phi_k in coefficients."""
    c = np.asarray(c)
    gamma = np.asarray(gamma)
    if c.shape != gamma.shape or c.ndim != 1:
        raise ConformabilityError(f"coefficients {c.shape} and modulation {gamma.shape} must match")
    return c * gamma


def analogy(
    a: str,
    b: str,
    c: str,
    store: EmbeddingStore,
    exclude_inputs: bool = True,
    metric: str = "euclidean",
) -> list[tuple[str, float]]:
    """Rank answers to "b is to a as ? is to c".

    The query is f_b - f_a + f_c, so king - man + woman is
    ``analogy("man", "king", "woman", store)``. Candidates are ranked by
    distance to the query, ties broken by id.
    """
    q = store[b] - store[a] + store[c]
    excluded = {a, b, c} if exclude_inputs else set()
    ids = [k for k in store.ids() if k not in excluded]
    if not ids:
        raise PreconditionError("no candidates left after excluding the query ids")
    E = np.vstack([store[k] for k in ids])
    if metric == "euclidean":
        dist = np.sqrt(np.sum((E - q) ** 2, axis=1))
    elif metric == "cosine":
        qn = np.linalg.norm(q)
        en = np.linalg.norm(E, axis=1)
        denom = np.where(en * qn > 0, en * qn, 1.0)
        dist = 1.0 - (E @ q) / denom
    else:
        raise PreconditionError(f"unknown analogy metric {metric!r}")
    ranked = sorted(zip(ids, dist.tolist()), key=lambda t: (t[1], t[0]))
    return ranked


def relational_kernel(pair1, pair2, base: KernelDescriptor) -> float:
    """<Phi(x) (x) Phi(y), Phi(x') (x) Phi(y')> = K(x, x') K(y, y')."""
    (x, y), (xp, yp) = pair1, pair2
    return eval_kernel(base, x, xp) * eval_kernel(base, y, yp)


def compose_relational_kernel(
    k1: Callable | Sequence[float] | None,
    k2: Callable | Sequence[float] | None,
    mediators: Sequence,
    x,
    z,
    base: KernelDescriptor | None = None,
) -> float:
    """Chain kernel (1/M) sum_y K_R1(x, y) K_R2(y, z) over a mediator set.

    ``k1`` and ``k2`` are either callables of two embeddings, precomputed
    value sequences aligned with ``mediators`` (k1[m] = K_R1(x, y_m),
    k2[m] = K_R2(y_m, z)), or ``None`` to use the ``base`` kernel.
    """
    mediators = list(mediators)
    if not mediators:
        raise PreconditionError("composition needs a nonempty mediator set")

    def values(k, left):
        if k is None:
            if base is None:
                raise PreconditionError("a base kernel is required when k1 or k2 is None")
            k = lambda u, v: eval_kernel(base, u, v)  # noqa: E731
        if callable(k):
            return np.array([k(x, y) if left else k(y, z) for y in mediators], dtype=float)
        vals = np.asarray(k, dtype=float)
        if vals.shape != (len(mediators),):
            raise ConformabilityError(f"{vals.shape} kernel values for {len(mediators)} mediators")
        return vals

    v1 = values(k1, True)
    v2 = values(k2, False)
    return float(np.sum(v1 * v2) / len(mediators))


@dataclass(frozen=True, eq=False)
class RelationFamily:
    operators: dict = field(default_factory=dict)
    objectives: dict = field(default_factory=dict)

    @property
    def total_objective(self) -> float:
        return float(sum(self.objectives[r] for r in sorted(self.objectives)))

    def to_dict(self) -> dict:
        return {
            "relations": {r: self.operators[r].to_dict() for r in sorted(self.operators)},
            "objectives": {r: self.objectives[r] for r in sorted(self.objectives)},
            "total_objective": self.total_objective,
        }


def fit_relation_family(
    triples: Sequence[ReasoningTriple],
    store: EmbeddingStore,
    lam: float,
) -> RelationFamily:
    """Fit one operator per relation.

    With the regularizer sum_r ||T_r||_HS^2 the joint objective over all
    triples separates into independent per-relation ridge problems.
    """
    if not lam > 0:
        raise PreconditionError(f"lambda must be > 0, got {lam}")
    grouped: dict[str, list] = defaultdict(list)
    for t in triples:
        for role in ("subject", "object"):
            if getattr(t, role) not in store:
                raise UnknownEntityError(
                    f"triple ({t.subject}, {t.relation}, {t.object}) references unknown {role} {getattr(t, role)!r}"
                )
        grouped[t.relation].append((store[t.subject], store[t.object]))
    operators, objectives = {}, {}
    for rel in sorted(grouped):
        op = fit_relation(grouped[rel], lam, relation=rel)
        A = np.vstack([a for a, _ in grouped[rel]])
        B = np.vstack([b for _, b in grouped[rel]])
        operators[rel] = op
        objectives[rel] = ridge_objective(op.T, A, B, lam)
    return RelationFamily(operators, objectives)


def family_objective(family: RelationFamily, triples: Sequence[ReasoningTriple], store: EmbeddingStore, lam: float) -> float:
    """Joint objective sum_i ||T_{R_i} f_{x_i} - f_{y_i}||^2 + lam * sum_r ||T_r||_HS^2."""
    total = 0.0
    for t in triples:
        r = family.operators[t.relation](store[t.subject]) - store[t.object]
        total += float(r @ r)
    return total + lam * sum(hs_norm(op.T) ** 2 for op in family.operators.values())
