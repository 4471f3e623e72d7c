"""
Fourier-domain models on sampled functions.

The transform is the unitary DFT

    s_k = N^{-1/2} * sum_j f_j exp(-i 2 pi k j / N),

so ||s|| (Euclidean) equals the sample-space Euclidean norm of ``f``. The
Fourier coefficient of the continuous convention, integral of
f(x) exp(-i 2 pi k x) dx, is ``s_k / sqrt(N)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConformabilityError, PreconditionError
from .function_space import SampledFunction

THETA_FLOOR = 1e-8


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex DFT coefficients in standard ordering (negative k in the upper half)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 1:
            raise PreconditionError(f"spectrum must be a nonempty 1-D array, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise PreconditionError("spectrum entries must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class MultiplierBank:
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.complex128)
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise PreconditionError("multipliers must be a finite 1-D array")
        object.__setattr__(self, "gamma", _frozen(g))


@dataclass(frozen=True, eq=False)
class ThresholdParams:
    """Per-frequency thresholds; 0 marks an untrainable pass-through bin."""

    theta: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.ndim != 1:
            raise PreconditionError("theta must be 1-D")
        if not np.all(np.isfinite(t)):
            raise PreconditionError("theta must be finite")
        if np.any(t < 0):
            raise PreconditionError(f"thresholds must be >= 0, found min {t.min()!r}")
        object.__setattr__(self, "theta", _frozen(t))


# -- transforms --------------------------------------------------------------


def _dft_direct(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[0]
    k = np.arange(n)
    W = np.exp(sign * 2j * np.pi * np.outer(k, k) / n)
    return W @ x


def _fft_radix2(x: np.ndarray, sign: int) -> np.ndarray:
    """Iterative Cooley-Tukey; ``x.size`` must be a power of two."""
    n = x.shape[0]
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    a = x[rev].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        a = a.reshape(-1, size)
        even = a[:, :half].copy()
        odd = a[:, half:] * tw
        a[:, :half] = even + odd
        a[:, half:] = even - odd
        a = a.reshape(-1)
        size *= 2
    return a


def _dft(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[0]
    if n & (n - 1) == 0:
        return _fft_radix2(x, sign)
    return _dft_direct(x, sign)


def forward_transform(f: SampledFunction) -> Spectrum:
    return Spectrum(_dft(np.asarray(f.samples, dtype=np.complex128), -1) / np.sqrt(f.n))


def inverse_transform(s: Spectrum, real: bool | None = None) -> SampledFunction:
    """Inverse of :func:`forward_transform`.

    With ``real=None`` the imaginary part is dropped when it is within 1e-12
    of zero relative to the signal; ``real=True`` always drops it.
    """
    x = _dft(s.coeffs, +1) / np.sqrt(s.n)
    if real is None:
        scale = max(1.0, float(np.max(np.abs(x))))
        real = bool(np.max(np.abs(x.imag)) <= 1e-12 * scale)
    return SampledFunction(x.real if real else x)


def apply_multiplier(s: Spectrum, g: MultiplierBank) -> Spectrum:
    if g.gamma.shape[0] != s.n:
        raise ConformabilityError(f"{g.gamma.shape[0]} multipliers for a spectrum of length {s.n}")
    return Spectrum(s.coeffs * g.gamma)


def circular_convolve(f: SampledFunction, h: SampledFunction) -> SampledFunction:
    """Direct O(N^2) circular convolution (f * h)_n = sum_m f_m h_{(n - m) mod N}.

    The unit impulse is the identity. Under the unitary transform,
    forward(f * h) = forward(f) * convolution_multiplier(h).
    """
    if f.n != h.n:
        raise ConformabilityError(f"length mismatch: {f.n} vs {h.n}")
    n = f.n
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return SampledFunction(h.samples[idx] @ f.samples)


def convolution_multiplier(h: SampledFunction) -> MultiplierBank:
    """Multipliers realizing convolution with ``h`` on unitary spectra."""
    return MultiplierBank(forward_transform(h).coeffs * np.sqrt(h.n))


def spectral_convolve(f: SampledFunction, h: SampledFunction) -> SampledFunction:
    if f.n != h.n:
        raise ConformabilityError(f"length mismatch: {f.n} vs {h.n}")
    out = apply_multiplier(forward_transform(f), convolution_multiplier(h))
    return inverse_transform(out, real=not (f.is_complex or h.is_complex))


# -- learnable soft thresholding ------------------------------------------------


def _check_theta(s: Spectrum, t: ThresholdParams) -> None:
    if t.theta.shape[0] != s.n:
        raise ConformabilityError(f"{t.theta.shape[0]} thresholds for a spectrum of length {s.n}")


def _attenuation(z: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """z / (z + theta), with 0 at z = 0 and 1 on sentinel bins."""
    denom = z + theta
    with np.errstate(invalid="ignore", divide="ignore"):
        sig = np.where(denom > 0, z / np.where(denom > 0, denom, 1.0), 0.0)
    return np.where(theta == 0, 1.0, sig)


def soft_threshold_spectrum(s: Spectrum, t: ThresholdParams) -> Spectrum:
    """out_k = |s_k| / (|s_k| + theta_k) * s_k; phase is preserved."""
    _check_theta(s, t)
    return Spectrum(_attenuation(np.abs(s.coeffs), t.theta) * s.coeffs)


def _stack(pairs) -> tuple[np.ndarray, np.ndarray]:
    S = np.vstack([p[0].coeffs for p in pairs])
    T = np.vstack([p[1].coeffs for p in pairs])
    return S, T


def _loss_and_grad(S: np.ndarray, T: np.ndarray, theta: np.ndarray) -> tuple[float, np.ndarray]:
    Z = np.abs(S)
    denom = Z + theta
    with np.errstate(invalid="ignore", divide="ignore"):
        sig = np.where(denom > 0, Z / np.where(denom > 0, denom, 1.0), 0.0)
        dsig = np.where(denom > 0, -Z / np.where(denom > 0, denom, 1.0) ** 2, 0.0)
    R = sig * S - T
    loss = float(np.sum(np.abs(R) ** 2))
    grad = np.sum(2.0 * np.real(np.conj(R) * S) * dsig, axis=0)
    return loss, grad


def threshold_loss(input: Spectrum, target: Spectrum, t: ThresholdParams) -> float:
    """sum_k |soft_threshold(input)_k - target_k|^2."""
    _check_theta(input, t)
    if target.n != input.n:
        raise ConformabilityError(f"length mismatch: {input.n} vs {target.n}")
    out = soft_threshold_spectrum(input, t).coeffs
    return float(np.sum(np.abs(out - target.coeffs) ** 2))


def threshold_gradient(input: Spectrum, target: Spectrum, t: ThresholdParams) -> np.ndarray:
    """Gradient of :func:`threshold_loss` with respect to every theta_k.

    Uses d/dtheta [z / (z + theta)] = -z / (z + theta)^2.
    """
    _check_theta(input, t)
    if target.n != input.n:
        raise ConformabilityError(f"length mismatch: {input.n} vs {target.n}")
    if np.any(t.theta == 0):
        raise PreconditionError("theta contains the pass-through sentinel 0, which is not trainable")
    _, grad = _loss_and_grad(input.coeffs[None, :], target.coeffs[None, :], t.theta)
    return grad


@dataclass(frozen=True, eq=False)
class ThresholdFit:
    params: ThresholdParams
    loss_trace: list = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.loss_trace[0]

    @property
    def final_loss(self) -> float:
        return min(self.loss_trace)


def fit_threshold(
    pairs: Sequence[tuple[Spectrum, Spectrum]],
    theta0: ThresholdParams,
    lr: float,
    steps: int,
) -> ThresholdFit:
    """Projected gradient descent on the mean squared spectral error.

    The batch loss is the mean over pairs of :func:`threshold_loss`. After
    every step theta is clamped to >= 1e-8. The returned parameters are the
    lowest-loss iterate seen, so the reported loss never exceeds the initial
    one; ``loss_trace[i]`` is the loss before step ``i`` plus the final loss.
    """
    pairs = list(pairs)
    if not pairs:
        raise PreconditionError("fit_threshold needs at least one training pair")
    if lr < 0:
        raise PreconditionError(f"learning rate must be >= 0, got {lr}")
    if np.any(theta0.theta <= 0):
        raise PreconditionError("initial thresholds must be strictly positive")
    S, T = _stack(pairs)
    if S.shape[1] != theta0.theta.shape[0] or T.shape != S.shape:
        raise ConformabilityError("training spectra and thresholds must share one length")
    n_pairs = S.shape[0]
    theta = np.array(theta0.theta, dtype=float)
    best_theta, best_loss = theta.copy(), np.inf
    trace = []
    for _ in range(int(steps) + 1):
        loss, grad = _loss_and_grad(S, T, theta)
        loss /= n_pairs
        trace.append(loss)
        if loss < best_loss:
            best_loss, best_theta = loss, theta.copy()
        if len(trace) > steps or lr == 0:
            break
        theta = np.maximum(theta - lr * grad / n_pairs, THETA_FLOOR)
    if lr == 0:
        best_theta = np.array(theta0.theta, dtype=float)
    return ThresholdFit(ThresholdParams(best_theta), trace)
