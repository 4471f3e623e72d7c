"""
Finite-rank operator estimation and Koopman/EDMD models.

Operators act on coefficient vectors. The ridge estimate of T minimizing

    sum_i ||T f_i - g_i||^2 + lam * ||T||_HS^2

is T = G_yx (G_xx + lam I)^{-1} with G_xx = sum f_i f_i^H and
G_yx = sum g_i f_i^H.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import ConformabilityError, DegeneracyError, NumericalError, PreconditionError

PINV_CUTOFF = 1e-12
EIG_RESIDUAL_LIMIT = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    domain: str = "coeff"
    codomain: str = "coeff"

    def __post_init__(self):
        E = np.asarray(self.entries)
        E = E.astype(np.complex128 if np.iscomplexobj(E) else np.float64)
        if E.ndim != 2 or min(E.shape) < 1:
            raise PreconditionError(f"operator must be a nonempty matrix, got shape {E.shape}")
        if not np.all(np.isfinite(E)):
            raise PreconditionError("operator entries must be finite")
        object.__setattr__(self, "entries", _frozen(E))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @classmethod
    def identity(cls, d: int, tag: str = "coeff") -> "OperatorMatrix":
        return cls(np.eye(d), tag, tag)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.shape[1] != other.shape[0]:
            raise ConformabilityError(f"cannot compose {self.shape} with {other.shape}")
        return OperatorMatrix(self.entries @ other.entries, other.domain, self.codomain)


def _as_rows(vectors, name: str) -> np.ndarray:
    A = np.asarray(vectors)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[0] < 1:
        raise ConformabilityError(f"{name} must be a nonempty list of equal-length vectors")
    return A


def fit_operator_ridge(inputs, outputs, lam: float) -> OperatorMatrix:
    """Hilbert-Schmidt regularized least-squares operator between coefficient spaces."""
    X = _as_rows(inputs, "inputs")
    Y = _as_rows(outputs, "outputs")
    if X.shape[0] != Y.shape[0]:
        raise ConformabilityError(f"{X.shape[0]} inputs but {Y.shape[0]} outputs")
    if not lam > 0:
        raise PreconditionError(f"lambda must be > 0, got {lam}")
    Gxx = X.T @ X.conj()
    Gyx = Y.T @ X.conj()
    A = Gxx + lam * np.eye(X.shape[1])
    # T A = Gyx  <=>  A^H T^H = Gyx^H, and A is Hermitian
    T = scipy.linalg.solve(A, Gyx.conj().T, assume_a="pos").conj().T
    return OperatorMatrix(T)


def ridge_objective(T: OperatorMatrix, inputs, outputs, lam: float) -> float:
    X = _as_rows(inputs, "inputs")
    Y = _as_rows(outputs, "outputs")
    R = X @ T.entries.T - Y
    return float(np.sum(np.abs(R) ** 2) + lam * hs_norm(T) ** 2)


def hs_norm(T: OperatorMatrix) -> float:
    return float(np.sqrt(np.sum(np.abs(T.entries) ** 2)))


def apply_operator(T: OperatorMatrix, c) -> np.ndarray:
    c = np.asarray(c)
    if c.shape != (T.shape[1],):
        raise ConformabilityError(f"operator expects a vector of length {T.shape[1]}, got shape {c.shape}")
    return T.entries @ c


# -- dictionaries of observables ------------------------------------------------


class DictionaryKind(str, Enum):
    IDENTITY = "identity"
    MONOMIALS = "monomials"
    RBF = "rbf"
    DELAY = "delay"


def monomial_exponents(p: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree <= ``degree``, graded then reverse-lexicographic.

    The constant comes first, followed by the raw coordinates x_1..x_p.
    """
    out = []
    for total in range(degree + 1):
        block = [e for e in itertools.product(range(total + 1), repeat=p) if sum(e) == total]
        out.extend(sorted(block, reverse=True))
    return out


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Feature map Psi from states in R^p to observables in R^D.

    Every kind keeps the raw state coordinates among its outputs, so the
    readout is an exact coordinate selection:

    * ``identity``: Psi(x) = x.
    * ``monomials``: all monomials of total degree <= ``degree``.
    * ``rbf``: x followed by exp(-|x - c|^2 / (2 bandwidth^2)) per center.
    * ``delay``: identity on a delay-stacked state (x_t, x_{t-1}, ..., x_{t-lags})
      of dimension base_dim * (lags + 1); the readout returns x_t.
    """

    kind: DictionaryKind
    state_dim: int
    degree: int = 1
    centers: np.ndarray | None = None
    bandwidth: float = 1.0
    lags: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", DictionaryKind(self.kind))
        except ValueError:
            raise PreconditionError(f"unknown dictionary kind {self.kind!r}") from None
        if self.state_dim < 1:
            raise PreconditionError("state dimension must be >= 1")
        if self.kind is DictionaryKind.MONOMIALS and self.degree < 1:
            raise PreconditionError("monomial degree must be >= 1")
        if self.kind is DictionaryKind.RBF:
            C = np.atleast_2d(np.asarray(self.centers, dtype=float))
            if C.shape[1] != self.state_dim:
                raise ConformabilityError(f"centers have dimension {C.shape[1]}, state has {self.state_dim}")
            if not self.bandwidth > 0:
                raise PreconditionError("RBF bandwidth must be positive")
            object.__setattr__(self, "centers", _frozen(C))
        if self.kind is DictionaryKind.DELAY:
            if self.lags < 0 or self.state_dim % (self.lags + 1):
                raise PreconditionError(
                    f"delay state dimension {self.state_dim} is not a multiple of lags + 1 = {self.lags + 1}"
                )

    @classmethod
    def identity(cls, p: int) -> "Dictionary":
        return cls(DictionaryKind.IDENTITY, p)

    @classmethod
    def monomials(cls, p: int, degree: int) -> "Dictionary":
        return cls(DictionaryKind.MONOMIALS, p, degree=degree)

    @classmethod
    def rbf(cls, centers, bandwidth: float) -> "Dictionary":
        C = np.atleast_2d(np.asarray(centers, dtype=float))
        return cls(DictionaryKind.RBF, C.shape[1], centers=C, bandwidth=bandwidth)

    @classmethod
    def delay(cls, base_dim: int, lags: int) -> "Dictionary":
        return cls(DictionaryKind.DELAY, base_dim * (lags + 1), lags=lags)

    @property
    def output_dim(self) -> int:
        if self.kind is DictionaryKind.MONOMIALS:
            return len(monomial_exponents(self.state_dim, self.degree))
        if self.kind is DictionaryKind.RBF:
            return self.state_dim + self.centers.shape[0]
        return self.state_dim

    @property
    def readout_dim(self) -> int:
        if self.kind is DictionaryKind.DELAY:
            return self.state_dim // (self.lags + 1)
        return self.state_dim

    def readout_matrix(self) -> np.ndarray:
        p, D = self.readout_dim, self.output_dim
        R = np.zeros((p, D))
        offset = 1 if self.kind is DictionaryKind.MONOMIALS else 0
        R[np.arange(p), offset + np.arange(p)] = 1.0
        return R

    def lift(self, X) -> np.ndarray:
        """Evaluate Psi row-wise on an (n, p) array of states."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.state_dim:
            raise ConformabilityError(f"dictionary expects states of dimension {self.state_dim}, got {X.shape[1]}")
        if self.kind is DictionaryKind.MONOMIALS:
            E = np.array(monomial_exponents(self.state_dim, self.degree))
            return np.prod(X[:, None, :] ** E[None, :, :], axis=2)
        if self.kind is DictionaryKind.RBF:
            d2 = np.sum((X[:, None, :] - self.centers[None, :, :]) ** 2, axis=2)
            return np.hstack([X, np.exp(-d2 / (2 * self.bandwidth**2))])
        return X.copy()

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "state_dim": self.state_dim}
        if self.kind is DictionaryKind.MONOMIALS:
            d["degree"] = self.degree
        if self.kind is DictionaryKind.RBF:
            d["centers"] = self.centers.tolist()
            d["bandwidth"] = self.bandwidth
        if self.kind is DictionaryKind.DELAY:
            d["lags"] = self.lags
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Dictionary":
        return cls(**d)


def eval_dictionary(d: Dictionary, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (d.state_dim,):
        raise ConformabilityError(f"dictionary expects a state of dimension {d.state_dim}, got shape {x.shape}")
    return d.lift(x[None, :])[0]


def delay_embed(trajectory, lags: int) -> np.ndarray:
    """Stack (x_t, x_{t-1}, ..., x_{t-lags}) for t = lags..T-1."""
    X = np.asarray(trajectory, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] <= lags:
        raise PreconditionError(f"trajectory of length {X.shape[0]} is too short for {lags} lags")
    return np.hstack([X[lags - i: X.shape[0] - i] for i in range(lags + 1)])


# -- EDMD ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SnapshotPairs:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.shape != Y.shape:
            raise ConformabilityError(f"snapshot arrays differ in shape: {X.shape} vs {Y.shape}")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "Y", _frozen(Y))

    @classmethod
    def from_trajectory(cls, trajectory) -> "SnapshotPairs":
        T = np.asarray(trajectory, dtype=float)
        return cls(T[:-1], T[1:])

    def __len__(self):
        return self.X.shape[0]


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    dictionary: Dictionary
    K: OperatorMatrix
    readout: np.ndarray

    def to_dict(self) -> dict:
        return {
            "dictionary": self.dictionary.to_dict(),
            "K": {"rows": self.K.shape[0], "cols": self.K.shape[1], "entries": self.K.entries.ravel().tolist()},
            "readout": {
                "rows": self.readout.shape[0],
                "cols": self.readout.shape[1],
                "entries": self.readout.ravel().tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KoopmanModel":
        K = np.asarray(d["K"]["entries"], dtype=float).reshape(d["K"]["rows"], d["K"]["cols"])
        R = np.asarray(d["readout"]["entries"], dtype=float).reshape(d["readout"]["rows"], d["readout"]["cols"])
        return cls(Dictionary.from_dict(d["dictionary"]), OperatorMatrix(K, "observables", "observables"), R)


def fit_edmd(pairs: SnapshotPairs, d: Dictionary, lam: float = 0.0, strict: bool = True) -> KoopmanModel:
    """Extended DMD: least-squares Koopman matrix on lifted snapshot pairs.

    ``lam > 0`` delegates to :func:`fit_operator_ridge`. ``lam == 0`` uses
    the SVD pseudoinverse of the lifted Gram matrix (cutoff 1e-12 * s_max);
    when that Gram matrix is rank deficient a ``DegeneracyError`` is raised
    unless ``strict=False``, which returns the minimum-norm solution.
    """
    if lam < 0:
        raise PreconditionError(f"lambda must be >= 0, got {lam}")
    PX = d.lift(pairs.X)
    PY = d.lift(pairs.Y)
    n, D = PX.shape
    if n < D:
        warnings.warn(f"only {n} snapshots for {D} observables; the Koopman fit is underdetermined", stacklevel=2)
    if lam > 0:
        K = fit_operator_ridge(PX, PY, lam).entries
    else:
        Gxx = PX.T @ PX
        Gyx = PY.T @ PX
        s = np.linalg.svd(Gxx, compute_uv=False)
        rank = int(np.sum(s > PINV_CUTOFF * s[0])) if s[0] > 0 else 0
        if rank < D and strict:
            raise DegeneracyError(
                f"lifted Gram matrix has rank {rank} < {D} at lambda=0; use lambda > 0 or strict=False",
                condition=float(s[0] / s[-1]) if s[-1] > 0 else float("inf"),
            )
        K = Gyx @ np.linalg.pinv(Gxx, rcond=PINV_CUTOFF, hermitian=True)
    return KoopmanModel(d, OperatorMatrix(K, "observables", "observables"), d.readout_matrix())


def koopman_eigs(m: KoopmanModel) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs of K with unit-norm eigenvectors, sorted by descending |lambda|.

    Ties in magnitude are broken by descending real part, then imaginary part.
    """
    K = m.K.entries
    try:
        w, V = np.linalg.eig(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on a {K.shape} Koopman matrix: {exc}") from exc
    order = sorted(range(len(w)), key=lambda i: (-round(abs(w[i]), 12), -w[i].real, -w[i].imag))
    out = []
    for i in order:
        v = V[:, i] / np.linalg.norm(V[:, i])
        residual = float(np.linalg.norm(K @ v - w[i] * v))
        if residual > EIG_RESIDUAL_LIMIT:
            raise NumericalError(
                f"eigenpair residual {residual:.3e} exceeds {EIG_RESIDUAL_LIMIT:g} "
                f"(eigenvalue {w[i]:.6g}, cond(V)={np.linalg.cond(V):.3e})"
            )
        out.append((complex(w[i]), v))
    return out


def advance(m: KoopmanModel, z: np.ndarray) -> np.ndarray:
    """One linear step in observable space."""
    return m.K.entries @ z


def forecast_lifted(m: KoopmanModel, z0, steps: int) -> np.ndarray:
    """Observable trajectory z_1..z_steps from z_0 under repeated :func:`advance`."""
    if steps < 1:
        raise PreconditionError(f"steps must be >= 1, got {steps}")
    z = np.asarray(z0)
    out = []
    for _ in range(steps):
        z = advance(m, z)
        out.append(z)
    return np.array(out)


def forecast(m: KoopmanModel, x0, steps: int) -> np.ndarray:
    """Lift x0 once, iterate K, and read out the state after each step."""
    Z = forecast_lifted(m, eval_dictionary(m.dictionary, x0), steps)
    return np.real(Z @ m.readout.T)
