"""
One-dimensional wavelet scattering up to order two.

Filters live in the frequency domain as multipliers on the unitary DFT.
Frequencies are measured relative to Nyquist, nu = 2|k|/N in [0, 1]. The
band-pass filter of scale j is an analytic Gaussian bump centered in the
dyadic band [2^{-j-1}, 2^{-j}] and the low-pass filter is a Gaussian of
width ~2^{-J}. The whole bank is rescaled so that

    |phi_k|^2 + sum_j |psi_{j,k}|^2 <= 1   for every bin k,

which together with the 1-Lipschitz modulus makes the cascade
non-expansive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConformabilityError, PreconditionError
from .function_space import SampledFunction
from .spectral import MultiplierBank, apply_multiplier, forward_transform, inverse_transform

# width of each band-pass bump as a fraction of its band's upper edge
BAND_WIDTH = 0.17
# width of the low-pass Gaussian as a fraction of 2^{-J}
LOWPASS_WIDTH = 0.4


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def signed_frequency(n: int) -> np.ndarray:
    """Nyquist-normalized signed frequency of each DFT bin (Nyquist bin counted as +1)."""
    k = np.arange(n)
    k = np.where(k <= n // 2, k, k - n)
    return 2.0 * k / n


@dataclass(frozen=True, eq=False)
class FilterBank:
    J: int
    n: int
    psi_hat: np.ndarray  # (J, n), real, nonnegative
    phi_hat: np.ndarray  # (n,), real, symmetric

    def littlewood_paley(self) -> np.ndarray:
        return self.phi_hat**2 + np.sum(self.psi_hat**2, axis=0)

    def band_energy_fraction(self, j: int) -> float:
        """Share of |psi_j|^2 inside [2^{-j-1}, 2^{-j}]."""
        nu = np.abs(signed_frequency(self.n))
        e = self.psi_hat[j] ** 2
        inside = (nu >= 2.0 ** (-j - 1)) & (nu <= 2.0**-j)
        return float(e[inside].sum() / e.sum())


def build_filter_bank(J: int, n: int) -> FilterBank:
    if n < 2 or n & (n - 1):
        raise PreconditionError(f"signal length must be a power of two >= 2, got {n}")
    if J < 1 or 2**J > n:
        raise PreconditionError(f"need 1 <= J and 2^J <= N, got J={J}, N={n}")
    nu = signed_frequency(n)
    psi = np.zeros((J, n))
    for j in range(J):
        hi = 2.0**-j
        center = 0.75 * hi
        width = BAND_WIDTH * hi
        bump = np.exp(-((nu - center) ** 2) / (2 * width**2))
        psi[j] = np.where(nu > 0, bump, 0.0)
    phi = np.exp(-(nu**2) / (2 * (LOWPASS_WIDTH * 2.0**-J) ** 2))
    lp = phi**2 + np.sum(psi**2, axis=0)
    peak = float(lp.max())
    if peak > 1.0:
        psi /= np.sqrt(peak)
        phi /= np.sqrt(peak)
    return FilterBank(J, n, _frozen(psi), _frozen(phi))


@dataclass(frozen=True, eq=False)
class ScatteringCoefficients:
    """Subsampled scattering outputs keyed by path.

    ``order1`` maps j1 -> sequence, ``order2`` maps (j1, j2) -> sequence.
    ``n`` is the length of the analyzed signal, used for L² weighting.
    """

    n: int
    J: int
    order0: np.ndarray
    order1: dict = field(default_factory=dict)
    order2: dict = field(default_factory=dict)

    def paths(self) -> list:
        return ["0"] + [f"1:{j}" for j in sorted(self.order1)] + [
            f"2:{a},{b}" for a, b in sorted(self.order2)
        ]

    def as_dict(self) -> dict:
        out = {"0": self.order0}
        for j in sorted(self.order1):
            out[f"1:{j}"] = self.order1[j]
        for a, b in sorted(self.order2):
            out[f"2:{a},{b}"] = self.order2[(a, b)]
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([np.asarray(v, dtype=float) for v in self.as_dict().values()])

    def energy(self) -> float:
        """L² energy with the same 1/N weight as the input signal's norm."""
        return float(np.sum(self.flat() ** 2) / self.n)


def scattering_distance(a: ScatteringCoefficients, b: ScatteringCoefficients) -> float:
    if a.paths() != b.paths() or a.n != b.n:
        raise ConformabilityError("scattering outputs have different path sets or lengths")
    return float(np.sqrt(np.sum((a.flat() - b.flat()) ** 2) / a.n))


def _filter(x: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    s = apply_multiplier(forward_transform(SampledFunction(x)), MultiplierBank(multiplier))
    return inverse_transform(s, real=False).samples


def _average(x: np.ndarray, bank: FilterBank) -> np.ndarray:
    return np.real(_filter(x, bank.phi_hat))[:: 2**bank.J]


def scatter(f: SampledFunction, bank: FilterBank, order: int = 2) -> ScatteringCoefficients:
    """Scattering transform of a real signal.

    order0 = f * phi, order1[j1] = |f * psi_j1| * phi and
    order2[(j1, j2)] = ||f * psi_j1| * psi_j2| * phi for j1 < j2, every
    output subsampled by 2^J.
    """
    if f.n != bank.n:
        raise ConformabilityError(f"signal length {f.n} does not match filter bank length {bank.n}")
    if order not in (0, 1, 2):
        raise PreconditionError(f"scattering order must be 0, 1 or 2, got {order}")
    if f.is_complex:
        raise PreconditionError("scattering expects a real-valued signal")
    x = np.asarray(f.samples, dtype=float)
    order0 = _average(x, bank)
    order1, order2 = {}, {}
    if order >= 1:
        for j1 in range(bank.J):
            u1 = np.abs(_filter(x, bank.psi_hat[j1]))
            order1[j1] = _average(u1, bank)
            if order == 2:
                for j2 in range(j1 + 1, bank.J):
                    u2 = np.abs(_filter(u1, bank.psi_hat[j2]))
                    order2[(j1, j2)] = _average(u2, bank)
    return ScatteringCoefficients(f.n, bank.J, _frozen(order0), order1, order2)
