"""
Sparse coefficient recovery from underdetermined measurements y = Phi Psi alpha.

Basis pursuit is solved through its penalized form

    min_alpha 1/2 ||y - A alpha||^2 + mu ||alpha||_1,   A = Phi Psi,

with proximal gradient (ISTA/FISTA) at step 1/L, followed by an optional
least-squares refit on the detected support.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConformabilityError, NumericalError, PreconditionError

POWER_ITERATIONS = 30
SUPPORT_RELATIVE_THRESHOLD = 1e-6
# slack for floating-point noise when checking ISTA's monotone decrease
MONOTONE_SLACK = 1e-12


def soft_shrink(z, t):
    """sign(z) * max(|z| - t, 0); works elementwise on arrays."""
    if np.any(np.asarray(t) < 0):
        raise PreconditionError(f"shrinkage threshold must be >= 0, got {t}")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def sensing_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """Gaussian matrix with i.i.d. N(0, 1/m) entries, fully determined by ``seed``."""
    if m < 1 or n < 1:
        raise PreconditionError(f"sensing matrix needs m, N >= 1, got {m}, {n}")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)) / np.sqrt(m)


def power_method_estimate(A: np.ndarray, iterations: int = POWER_ITERATIONS) -> float:
    """Power iteration for the largest eigenvalue of A^T A from a fixed start vector."""
    v = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
    est = 0.0
    for _ in range(iterations):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = float(v @ w)
        v = w / nw
    return est


@dataclass(frozen=True, eq=False)
class SensingSystem:
    """Measurement operator Phi, synthesis operator Psi and their product A.

    ``L`` is the exact squared spectral norm of A, which bounds the
    curvature of the data term; the power-method estimate is kept as
    ``L_power`` for diagnostics.
    """

    Phi: np.ndarray
    Psi: np.ndarray
    A: np.ndarray = field(init=False)
    L: float = field(init=False)
    L_power: float = field(init=False)

    def __post_init__(self):
        Phi = np.asarray(self.Phi, dtype=float)
        Psi = np.asarray(self.Psi, dtype=float)
        if Phi.ndim != 2 or Psi.ndim != 2 or Phi.shape[1] != Psi.shape[0]:
            raise ConformabilityError(f"incompatible shapes Phi {Phi.shape}, Psi {Psi.shape}")
        A = Phi @ Psi
        if Phi.shape[0] > Phi.shape[1]:
            warnings.warn(f"more measurements ({Phi.shape[0]}) than unknowns ({Phi.shape[1]})", stacklevel=2)
        L = float(np.linalg.norm(A, 2) ** 2)
        if not L > 0:
            raise PreconditionError("sensing system is identically zero")
        for name, value in (("Phi", Phi), ("Psi", Psi), ("A", A)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "L_power", power_method_estimate(A))

    @classmethod
    def from_phi(cls, Phi) -> "SensingSystem":
        Phi = np.asarray(Phi, dtype=float)
        return cls(Phi, np.eye(Phi.shape[1]))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    alpha: np.ndarray
    objective_trace: list
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "objective_trace": list(self.objective_trace),
            "iterations": self.iterations,
            "converged": self.converged,
        }


def lasso_objective(alpha: np.ndarray, y: np.ndarray, sys: SensingSystem, mu: float) -> float:
    r = y - sys.A @ alpha
    return float(0.5 * r @ r + mu * np.sum(np.abs(alpha)))


def _check_problem(y, sys: SensingSystem, mu: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (sys.A.shape[0],):
        raise ConformabilityError(f"measurement vector has shape {y.shape}, system expects ({sys.A.shape[0]},)")
    if not mu > 0:
        raise PreconditionError(f"mu must be > 0, got {mu}")
    return y


def _check_finite(x: np.ndarray, iteration: int) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite iterate at iteration {iteration}")


def ista(y, sys: SensingSystem, mu: float, max_iters: int = 10000, tol: float = 1e-12) -> RecoveryResult:
    """Iterative shrinkage-thresholding from alpha = 0.

    The objective trace starts with the value at alpha = 0 and is
    non-increasing. The loop stops once an iteration lowers the objective by
    less than ``tol``; if roundoff makes an update increase the objective,
    the previous iterate is kept and the run counts as converged.
    """
    y = _check_problem(y, sys, mu)
    A, step = sys.A, 1.0 / sys.L
    alpha = np.zeros(A.shape[1])
    resid = y.copy()
    obj = 0.5 * float(resid @ resid)
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        candidate = soft_shrink(alpha + step * (A.T @ resid), mu * step)
        _check_finite(candidate, it)
        new_resid = y - A @ candidate
        new_obj = 0.5 * float(new_resid @ new_resid) + mu * float(np.sum(np.abs(candidate)))
        if new_obj > obj:
            if new_obj - obj > MONOTONE_SLACK * max(1.0, abs(obj)):
                raise NumericalError(f"ISTA objective increased at iteration {it}: {obj!r} -> {new_obj!r}")
            converged = True
            break
        decrease = obj - new_obj
        alpha, resid, obj = candidate, new_resid, new_obj
        trace.append(obj)
        if decrease < tol:
            converged = True
            break
    return RecoveryResult(alpha, trace, it, converged)


def fista(y, sys: SensingSystem, mu: float, max_iters: int = 10000, tol: float = 1e-12) -> RecoveryResult:
    """Accelerated proximal gradient with t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2.

    Stops when the objective changes by less than ``tol`` in absolute value.
    """
    y = _check_problem(y, sys, mu)
    A, step = sys.A, 1.0 / sys.L
    alpha = np.zeros(A.shape[1])
    z = alpha.copy()
    t = 1.0
    obj = lasso_objective(alpha, y, sys, mu)
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new_alpha = soft_shrink(z + step * (A.T @ (y - A @ z)), mu * step)
        _check_finite(new_alpha, it)
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        z = new_alpha + ((t - 1.0) / t_next) * (new_alpha - alpha)
        alpha, t = new_alpha, t_next
        new_obj = lasso_objective(alpha, y, sys, mu)
        change = abs(obj - new_obj)
        obj = new_obj
        trace.append(obj)
        if change < tol:
            converged = True
            break
    return RecoveryResult(alpha, trace, it, converged)


def detect_support(alpha: np.ndarray, rel: float = SUPPORT_RELATIVE_THRESHOLD) -> np.ndarray:
    """Indices with |alpha_i| > rel * max |alpha|."""
    alpha = np.asarray(alpha, dtype=float)
    peak = float(np.max(np.abs(alpha))) if alpha.size else 0.0
    if peak == 0:
        return np.array([], dtype=int)
    return np.flatnonzero(np.abs(alpha) > rel * peak)


def debias(alpha, y, sys: SensingSystem) -> np.ndarray:
    """Least-squares refit of ``y`` on the support columns of A; zeros elsewhere."""
    y = np.asarray(y, dtype=float)
    support = detect_support(alpha)
    m = sys.A.shape[0]
    if support.size == 0:
        raise PreconditionError("cannot debias: recovered support is empty")
    if support.size > m:
        raise PreconditionError(f"cannot debias: support size {support.size} exceeds {m} measurements")
    coef, *_ = np.linalg.lstsq(sys.A[:, support], y, rcond=None)
    out = np.zeros(sys.A.shape[1])
    out[support] = coef
    return out


def planted_sparse(n: int, k: int, rng: np.random.Generator, min_magnitude: float = 0.5) -> np.ndarray:
    """k-sparse vector with random support, random signs and magnitudes in [min_magnitude, 1.5]."""
    if not 0 <= k <= n:
        raise PreconditionError(f"sparsity k={k} must lie in [0, {n}]")
    alpha = np.zeros(n)
    idx = rng.choice(n, size=k, replace=False)
    alpha[idx] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(min_magnitude, 1.5, size=k)
    return alpha
