"""
Discretized L²([0,1)) primitives.

Functions are sampled on the uniform grid x_i = i/N, i = 0..N-1, and the
inner product is the left-Riemann sum

    <f, g> = (1/N) * sum_i f_i * conj(g_i).

Under this rule sampled complex exponentials exp(i 2 pi k x) are exactly
orthonormal, so Fourier identities hold to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConformabilityError, DegeneracyError, PreconditionError

GRAM_CONDITION_LIMIT = 1e12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A real or complex function sampled on the uniform grid over [0, 1)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 1 or s.size < 1:
            raise PreconditionError(f"samples must be a nonempty 1-D sequence, got shape {s.shape}")
        if np.iscomplexobj(s):
            s = s.astype(np.complex128)
        else:
            s = s.astype(np.float64)
        if not np.all(np.isfinite(s)):
            raise PreconditionError("samples must be finite")
        object.__setattr__(self, "samples", _frozen(s))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.samples)

    @classmethod
    def from_callable(cls, func, n: int) -> "SampledFunction":
        return cls(func(np.arange(n) / n))

    @classmethod
    def zeros(cls, n: int) -> "SampledFunction":
        return cls(np.zeros(n))

    def __add__(self, other):
        _check_conformable(self, other)
        return SampledFunction(self.samples + other.samples)

    def __sub__(self, other):
        _check_conformable(self, other)
        return SampledFunction(self.samples - other.samples)

    def __mul__(self, scalar):
        return SampledFunction(self.samples * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFunction(-self.samples)

    def __len__(self):
        return self.n

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        return f"SampledFunction(n={self.n}, {kind})"


def _check_conformable(f: SampledFunction, g: SampledFunction) -> None:
    if f.n != g.n:
        raise ConformabilityError(f"length mismatch: {f.n} vs {g.n}")


def inner_product(f: SampledFunction, g: SampledFunction) -> complex | float:
    """Left-Riemann quadrature of f * conj(g) over [0, 1)."""
    _check_conformable(f, g)
    # vdot conjugates its first argument
    value = np.vdot(g.samples, f.samples) / f.n
    if not (f.is_complex or g.is_complex):
        return float(np.real(value))
    return complex(value)


def norm(f: SampledFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(f.samples) ** 2) / f.n))


def project_onto_unit(f: SampledFunction, psi: SampledFunction, tol: float = 1e-8) -> SampledFunction:
    """Project ``f`` onto the line spanned by the unit vector ``psi``."""
    _check_conformable(f, psi)
    psi_norm = norm(psi)
    if abs(psi_norm - 1.0) > tol:
        raise PreconditionError(f"psi must have unit norm, got {psi_norm!r}")
    return SampledFunction(inner_product(f, psi) * psi.samples)


def gram_matrix(vs: Sequence[SampledFunction]) -> np.ndarray:
    """Matrix G with G[i, j] = <v_j, v_i>."""
    V = np.vstack([v.samples for v in vs])
    return (V.conj() @ V.T) / V.shape[1]


def project_onto_span(
    f: SampledFunction,
    vs: Sequence[SampledFunction],
    max_condition: float = GRAM_CONDITION_LIMIT,
) -> SampledFunction:
    """Orthogonal projection of ``f`` onto span(vs).

    Solves the normal equations G c = b with G[i, j] = <v_j, v_i> and
    b[i] = <f, v_i>; the result is sum_j c_j v_j.

    Raises
    ------
    DegeneracyError
        If the Gram matrix condition number reaches ``max_condition``.
    """
    vs = list(vs)
    if not vs:
        raise PreconditionError("cannot project onto an empty span")
    for v in vs:
        _check_conformable(f, v)
    G = gram_matrix(vs)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond >= max_condition:
        raise DegeneracyError(
            f"Gram matrix is singular or ill-conditioned (cond={cond:.3e}, limit={max_condition:.1e})",
            condition=cond,
        )
    V = np.vstack([v.samples for v in vs])
    b = (V.conj() @ f.samples) / f.n
    c = np.linalg.solve(G, b)
    out = c @ V
    if not (f.is_complex or np.iscomplexobj(V)):
        out = np.real(out)
    return SampledFunction(out)


class BasisKind(str, Enum):
    FOURIER = "fourier"
    HAAR = "haar"


def fourier_frequencies(m: int) -> np.ndarray:
    """Integer frequencies 0, 1, -1, 2, -2, ... truncated to ``m`` entries."""
    ks = [0]
    k = 1
    while len(ks) < m:
        ks.append(k)
        if len(ks) < m:
            ks.append(-k)
        k += 1
    return np.array(ks[:m], dtype=int)


def _haar_elements(m: int, n: int) -> np.ndarray:
    x = np.arange(n) / n
    rows = [np.ones(n)]
    level = 0
    while len(rows) < m:
        scale = 2.0**level
        for shift in range(2**level):
            if len(rows) == m:
                break
            t = scale * x - shift
            rows.append(np.sqrt(scale) * (((t >= 0) & (t < 0.5)) * 1.0 - ((t >= 0.5) & (t < 1)) * 1.0))
        level += 1
    return np.vstack(rows)


@dataclass(frozen=True, eq=False)
class Basis:
    """Sampled orthonormal system; ``elements[n]`` holds phi_n on the grid."""

    kind: BasisKind
    elements: np.ndarray
    frequencies: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def n(self) -> int:
        return self.elements.shape[1]

    def element(self, index: int) -> SampledFunction:
        return SampledFunction(self.elements[index])

    def gram(self) -> np.ndarray:
        return (self.elements.conj() @ self.elements.T) / self.n


def make_basis(kind, m: int, n: int) -> Basis:
    """Build the first ``m`` elements of a Fourier or Haar system on ``n`` samples.

    Fourier elements are exp(i 2 pi k x) with k ordered 0, 1, -1, 2, -2, ...
    so that any truncation keeps the lowest |k|. Haar elements are the
    constant function followed by 2^{j/2} psi(2^j x - k), ordered by scale
    then shift.
    """
    try:
        kind = BasisKind(kind)
    except ValueError:
        raise PreconditionError(f"unsupported basis kind {kind!r}") from None
    if n < 1 or m < 1:
        raise PreconditionError(f"basis needs m >= 1 and n >= 1, got m={m}, n={n}")
    if m > n:
        raise PreconditionError(f"basis size m={m} exceeds grid size n={n}")
    if kind is BasisKind.FOURIER:
        ks = fourier_frequencies(m)
        x = np.arange(n) / n
        elements = np.exp(2j * np.pi * np.outer(ks, x))
        return Basis(kind, _frozen(elements), _frozen(ks))
    if n & (n - 1):
        raise PreconditionError(f"Haar basis requires a power-of-two grid, got n={n}")
    return Basis(kind, _frozen(_haar_elements(m, n)))


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    coeffs: np.ndarray
    basis_kind: BasisKind

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(np.asarray(self.coeffs)))

    def __len__(self):
        return self.coeffs.shape[0]


def analyze(f: SampledFunction, basis: Basis) -> CoefficientVector:
    """Coefficients c_n = <f, phi_n>."""
    if basis.n != f.n:
        raise ConformabilityError(f"basis sampled on {basis.n} points, function on {f.n}")
    c = (basis.elements.conj() @ f.samples) / f.n
    if basis.kind is BasisKind.HAAR and not f.is_complex:
        c = np.real(c)
    return CoefficientVector(c, basis.kind)


def synthesize(c: CoefficientVector, basis: Basis) -> SampledFunction:
    coeffs = c.coeffs if isinstance(c, CoefficientVector) else np.asarray(c)
    if coeffs.shape[0] != basis.size:
        raise ConformabilityError(f"{coeffs.shape[0]} coefficients for a basis of size {basis.size}")
    return SampledFunction(coeffs @ basis.elements)


def cross_gram(analysis: Sequence[SampledFunction], synthesis: Sequence[SampledFunction]) -> np.ndarray:
    """Matrix C with C[n, m] = <phi_n, psi_m>."""
    A = np.vstack([a.samples for a in analysis])
    S = np.vstack([s.samples for s in synthesis])
    return (A @ S.conj().T) / A.shape[1]


def dual_system(synthesis: Sequence[SampledFunction]) -> list[SampledFunction]:
    """Analysis functions biorthogonal to a linearly independent ``synthesis`` set.

    phi_n = sum_k (H^{-1})[n, k] psi_k with H[k, m] = <psi_k, psi_m>.
    """
    S = np.vstack([s.samples for s in synthesis])
    H = (S @ S.conj().T) / S.shape[1]
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond >= GRAM_CONDITION_LIMIT:
        raise DegeneracyError(f"synthesis set is degenerate (cond={cond:.3e})", condition=cond)
    A = np.linalg.inv(H) @ S
    return [SampledFunction(row) for row in A]


def biorthogonal_reconstruct(
    f: SampledFunction,
    analysis: Sequence[SampledFunction],
    synthesis: Sequence[SampledFunction],
    tol: float = 1e-8,
) -> SampledFunction:
    """Reconstruct sum_n <f, phi_n> psi_n from a biorthogonal pair of systems."""
    analysis, synthesis = list(analysis), list(synthesis)
    if len(analysis) != len(synthesis) or not analysis:
        raise ConformabilityError(
            f"analysis and synthesis sets must be nonempty and equal in size "
            f"({len(analysis)} vs {len(synthesis)})"
        )
    for g in analysis + synthesis:
        _check_conformable(f, g)
    C = cross_gram(analysis, synthesis)
    dev = float(np.max(np.abs(C - np.eye(len(analysis)))))
    if dev > tol:
        raise PreconditionError(f"systems are not biorthogonal: max |<phi_n, psi_m> - delta_nm| = {dev:.3e}")
    A = np.vstack([a.samples for a in analysis])
    S = np.vstack([s.samples for s in synthesis])
    c = (A.conj() @ f.samples) / f.n
    out = c @ S
    if not (f.is_complex or np.iscomplexobj(A) or np.iscomplexobj(S)):
        out = np.real(out)
    return SampledFunction(out)
