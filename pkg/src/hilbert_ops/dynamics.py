"""Fixed-step RK4 integration and trajectory datasets for Koopman experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DivergenceError, NumericalError, PreconditionError
from .operator_learning import SnapshotPairs

DIVERGENCE_BOUND = 1e6

LORENZ_DEFAULTS = {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0}
DUFFING_DEFAULTS = {"delta": 0.2, "alpha": -1.0, "beta": 1.0, "gamma": 0.3, "omega": 1.2}


def rk4_step(field, x, dt: float, t: float = 0.0) -> np.ndarray:
    """One classical Runge-Kutta step of dx/dt = field(t, x)."""
    if not dt > 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(field(t, x), dtype=float)
    k2 = np.asarray(field(t + dt / 2, x + dt / 2 * k1), dtype=float)
    k3 = np.asarray(field(t + dt / 2, x + dt / 2 * k2), dtype=float)
    k4 = np.asarray(field(t + dt, x + dt * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NumericalError(f"vector field returned non-finite values near t={t}")
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def lorenz_field(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0):
    def f(t, s):
        x, y, z = s
        return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])

    return f


def duffing_field(delta: float = 0.2, alpha: float = -1.0, beta: float = 1.0, gamma: float = 0.3, omega: float = 1.2):
    """x'' + delta x' + alpha x + beta x^3 = gamma cos(omega t), as a first-order system."""

    def f(t, s):
        x, v = s
        return np.array([v, -delta * v - alpha * x - beta * x**3 + gamma * np.cos(omega * t)])

    return f


class SystemKind(str, Enum):
    LORENZ = "lorenz"
    DUFFING = "duffing"


@dataclass(frozen=True)
class TrajectorySpec:
    system: SystemKind
    x0: tuple
    dt: float = 0.01
    steps: int = 2000
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            object.__setattr__(self, "system", SystemKind(self.system))
        except ValueError:
            raise PreconditionError(f"unknown system {self.system!r}") from None
        defaults = LORENZ_DEFAULTS if self.system is SystemKind.LORENZ else DUFFING_DEFAULTS
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise PreconditionError(f"unknown {self.system.value} parameters: {sorted(unknown)}")
        object.__setattr__(self, "params", {**defaults, **self.params})
        dim = 3 if self.system is SystemKind.LORENZ else 2
        if len(self.x0) != dim:
            raise PreconditionError(f"{self.system.value} needs a {dim}-dimensional initial state")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not self.dt > 0:
            raise PreconditionError(f"dt must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise PreconditionError(f"steps must be a positive integer, got {self.steps}")

    def field(self):
        if self.system is SystemKind.LORENZ:
            return lorenz_field(**self.params)
        return duffing_field(**self.params)


def integrate(field, x0, dt: float, steps: int) -> np.ndarray:
    """States x_0..x_steps; raises DivergenceError once any |coordinate| exceeds 1e6."""
    traj = np.empty((steps + 1, len(x0)))
    traj[0] = x0
    for i in range(steps):
        traj[i + 1] = rk4_step(field, traj[i], dt, t=i * dt)
        if np.max(np.abs(traj[i + 1])) > DIVERGENCE_BOUND:
            raise DivergenceError(f"trajectory diverged at step {i + 1} (|x| > {DIVERGENCE_BOUND:g})", step=i + 1)
    return traj


def gen_trajectory(spec: TrajectorySpec) -> tuple[SnapshotPairs, np.ndarray]:
    """Integrate ``spec`` and return (snapshot pairs, raw trajectory of steps + 1 states)."""
    traj = integrate(spec.field(), np.array(spec.x0), spec.dt, spec.steps)
    return SnapshotPairs.from_trajectory(traj), traj
