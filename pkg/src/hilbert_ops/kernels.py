"""Reproducing kernels, Gram matrices and kernel ridge regression."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import ConformabilityError, DegeneracyError, PreconditionError

CONDITION_LIMIT = 1e12


class KernelKind(str, Enum):
    RBF = "rbf"
    POLYNOMIAL = "polynomial"
    LINEAR = "linear"


@dataclass(frozen=True)
class KernelDescriptor:
    """Kernel family plus hyperparameters.

    ``rbf``: exp(-|x - y|^2 / (2 bandwidth^2)).
    ``polynomial``: (x . y + offset)^degree.
    ``linear``: x . y.
    """

    kind: KernelKind
    dim: int = 1
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", KernelKind(self.kind))
        except ValueError:
            raise PreconditionError(f"unknown kernel kind {self.kind!r}") from None
        if int(self.dim) != self.dim or self.dim < 1:
            raise PreconditionError(f"input dimension must be a positive integer, got {self.dim}")
        if self.kind is KernelKind.RBF and not self.bandwidth > 0:
            raise PreconditionError(f"RBF bandwidth must be positive, got {self.bandwidth}")
        if self.kind is KernelKind.POLYNOMIAL:
            if int(self.degree) != self.degree or self.degree < 1:
                raise PreconditionError(f"polynomial degree must be an integer >= 1, got {self.degree}")
            if self.offset < 0:
                raise PreconditionError(f"polynomial offset must be >= 0, got {self.offset}")

    @classmethod
    def rbf(cls, bandwidth: float = 1.0, dim: int = 1) -> "KernelDescriptor":
        return cls(KernelKind.RBF, dim=dim, bandwidth=bandwidth)

    @classmethod
    def polynomial(cls, degree: int = 2, offset: float = 1.0, dim: int = 1) -> "KernelDescriptor":
        return cls(KernelKind.POLYNOMIAL, dim=dim, degree=degree, offset=offset)

    @classmethod
    def linear(cls, dim: int = 1) -> "KernelDescriptor":
        return cls(KernelKind.LINEAR, dim=dim)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "dim": self.dim}
        if self.kind is KernelKind.RBF:
            d["bandwidth"] = self.bandwidth
        elif self.kind is KernelKind.POLYNOMIAL:
            d["degree"] = self.degree
            d["offset"] = self.offset
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelDescriptor":
        return cls(**d)


def _as_points(points, dim: int) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P.reshape(-1, 1) if dim == 1 else P.reshape(1, -1)
    if P.ndim != 2 or P.shape[1] != dim:
        raise ConformabilityError(f"expected points of dimension {dim}, got array of shape {np.shape(points)}")
    return P


def _as_vector(x, dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.shape != (dim,):
        raise ConformabilityError(f"expected a vector of dimension {dim}, got shape {v.shape}")
    return v


def cross_kernel(k: KernelDescriptor, X, Y) -> np.ndarray:
    """Matrix [K(x_i, y_j)] between two point sets."""
    X = _as_points(X, k.dim)
    Y = _as_points(Y, k.dim)
    if k.kind is KernelKind.RBF:
        sq = np.sum(X**2, 1)[:, None] + np.sum(Y**2, 1)[None, :] - 2 * X @ Y.T
        return np.exp(-np.maximum(sq, 0.0) / (2 * k.bandwidth**2))
    dots = X @ Y.T
    if k.kind is KernelKind.POLYNOMIAL:
        return (dots + k.offset) ** k.degree
    return dots


def eval_kernel(k: KernelDescriptor, x, y) -> float:
    x = _as_vector(x, k.dim)
    y = _as_vector(y, k.dim)
    if k.kind is KernelKind.RBF:
        d = x - y
        return float(np.exp(-np.dot(d, d) / (2 * k.bandwidth**2)))
    if k.kind is KernelKind.POLYNOMIAL:
        return float((np.dot(x, y) + k.offset) ** k.degree)
    return float(np.dot(x, y))


def gram_matrix(k: KernelDescriptor, points) -> np.ndarray:
    P = _as_points(points, k.dim)
    if P.shape[0] == 0:
        raise PreconditionError("gram_matrix needs at least one point")
    G = cross_kernel(k, P, P)
    G = 0.5 * (G + G.T)
    if k.kind is KernelKind.RBF:
        np.fill_diagonal(G, 1.0)
    return G


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Fitted representer expansion f(x) = sum_i alpha_i K(x, x_i)."""

    points: np.ndarray
    alpha: np.ndarray
    kernel: KernelDescriptor
    lam: float
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        for name in ("points", "alpha", "labels"):
            value = getattr(self, name)
            if value is not None:
                a = np.array(value, dtype=float, copy=True)
                a.setflags(write=False)
                object.__setattr__(self, name, a)
        if self.alpha.shape[0] != self.points.shape[0]:
            raise ConformabilityError(
                f"{self.alpha.shape[0]} dual coefficients for {self.points.shape[0]} points"
            )

    def to_dict(self) -> dict:
        d = {
            "kernel": self.kernel.to_dict(),
            "points": self.points.tolist(),
            "alpha": self.alpha.tolist(),
            "lambda": self.lam,
        }
        if self.labels is not None:
            d["labels"] = self.labels.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelModel":
        kernel = KernelDescriptor.from_dict(d["kernel"])
        return cls(
            points=_as_points(d["points"], kernel.dim),
            alpha=np.asarray(d["alpha"], dtype=float),
            kernel=kernel,
            lam=float(d["lambda"]),
            labels=None if d.get("labels") is None else np.asarray(d["labels"], dtype=float),
        )


def solve_regularized(K: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Solve (K + lam I) alpha = y.

    Cholesky first; a pivoted LU solve is the fallback when the factorization
    fails. At ``lam == 0`` the system is refused when cond(K) >= 1e12.
    """
    n = K.shape[0]
    if lam == 0:
        cond = np.linalg.cond(K)
        if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
            raise DegeneracyError(
                f"kernel matrix is singular at lambda=0 (cond={cond:.3e}); use lambda > 0",
                condition=cond,
            )
    A = K + lam * np.eye(n)
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
        return scipy.linalg.cho_solve(factor, y)
    except np.linalg.LinAlgError:
        try:
            return scipy.linalg.solve(A, y, assume_a="gen")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise DegeneracyError(f"regularized kernel system is singular: {exc}") from exc


def fit_krr(points, labels, k: KernelDescriptor, lam: float) -> KernelModel:
    """Kernel ridge regression, alpha = (K + lam I)^{-1} y."""
    if lam < 0:
        raise PreconditionError(f"lambda must be >= 0, got {lam}")
    P = _as_points(points, k.dim)
    y = np.asarray(labels, dtype=float)
    if y.ndim != 1:
        raise ConformabilityError("labels must be a 1-D array of scalars; use fit_krr_columns for multi-output")
    if y.shape[0] != P.shape[0]:
        raise ConformabilityError(f"{y.shape[0]} labels for {P.shape[0]} points")
    K = gram_matrix(k, P)
    alpha = solve_regularized(K, y, lam)
    return KernelModel(P, alpha, k, float(lam), y)


def fit_krr_columns(points, labels, k: KernelDescriptor, lam: float) -> list[KernelModel]:
    """Multi-output regression as independent fits, one per label column."""
    Y = np.asarray(labels, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    return [fit_krr(points, Y[:, j], k, lam) for j in range(Y.shape[1])]


def predict(m: KernelModel, x) -> float:
    x = _as_vector(x, m.kernel.dim)
    return float(cross_kernel(m.kernel, x[None, :], m.points)[0] @ m.alpha)


def predict_many(m: KernelModel, X) -> np.ndarray:
    return cross_kernel(m.kernel, X, m.points) @ m.alpha


def krr_objective(m: KernelModel, alpha=None) -> float:
    """Training objective sum (y_i - f(x_i))^2 + lam * alpha^T K alpha."""
    if m.labels is None:
        raise PreconditionError("model carries no training labels")
    a = m.alpha if alpha is None else np.asarray(alpha, dtype=float)
    K = gram_matrix(m.kernel, m.points)
    r = m.labels - K @ a
    return float(r @ r + m.lam * a @ K @ a)
