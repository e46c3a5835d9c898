"""Lossless nodal storage: state-of-charge dynamics and the set U(b)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ValidationError

DEFAULT_TOL = 1e-6


@lru_cache(maxsize=64)
def _cumulative(N: int) -> np.ndarray:
    L = -np.tril(np.ones((N, N)))
    L.setflags(write=False)
    return L


def cumulative_matrix(N: int) -> np.ndarray:
    """N x N lower-triangular matrix with -1 on and below the diagonal.

    ``(L @ u)[k]`` is the state of charge after period ``k``.
    """
    return _cumulative(N)


@dataclass(frozen=True)
class StorageFleet:
    b: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=float)
        if b.ndim != 1 or np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ValidationError("storage capacities must be a finite nonnegative vector")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @classmethod
    def none(cls, n: int) -> "StorageFleet":
        return cls(np.zeros(n))

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def initial_soc(self) -> np.ndarray:
        return np.zeros(self.n)

    @property
    def nodes(self) -> list[int]:
        """Indices of nodes with a physical device."""
        return [int(i) for i in np.flatnonzero(self.b > 0)]


@dataclass(frozen=True)
class StorageTrajectory:
    u: np.ndarray
    z: np.ndarray

    @classmethod
    def from_extraction(cls, u) -> "StorageTrajectory":
        u = np.asarray(u, dtype=float)
        return cls(u, simulate_soc(u))


def simulate_soc(u) -> np.ndarray:
    """States z(0..N) from z(k+1) = z(k) - u(k), z(0) = 0."""
    u = np.asarray(u, dtype=float)
    z = np.zeros(len(u) + 1)
    for k, uk in enumerate(u):
        z[k + 1] = z[k] - uk
    return z


@dataclass
class StorageVerdict:
    feasible: bool
    # (period k, signed violation): negative means the SoC dips below empty
    violations: list[tuple[int, float]] = field(default_factory=list)

    def __bool__(self):
        return self.feasible


def check_storage_feasible(u, b_i, tol: float = DEFAULT_TOL) -> StorageVerdict:
    """0 <= L u <= b_i within ``tol``; ``b_i`` is a scalar or a per-period vector."""
    u = np.asarray(u, dtype=float)
    soc = cumulative_matrix(len(u)) @ u
    cap = np.broadcast_to(np.asarray(b_i, dtype=float), soc.shape)
    violations = []
    for k, zk in enumerate(soc):
        if zk < -tol:
            violations.append((k, float(zk)))
        elif zk > cap[k] + tol:
            violations.append((k, float(zk - cap[k])))
    return StorageVerdict(not violations, violations)


def check_storage_cumulative(u, b_i: float, tol: float = DEFAULT_TOL) -> bool:
    """Same test written as running sums, 0 <= -sum_{l<k} u(l) <= b_i for k=1..N."""
    running = 0.0
    for uk in np.asarray(u, dtype=float):
        running -= uk
        if running < -tol or running > b_i + tol:
            return False
    return True


def split_storage_duals(price) -> tuple[np.ndarray, np.ndarray]:
    """Nonnegative (nu_upper, nu_lower) with L'(nu_upper - nu_lower) = price.

    Used for nodes with no device: the pair solving L'd = price is unique, and
    splitting it into positive and negative parts is complementary to the
    degenerate constraint 0 <= L u <= 0.
    """
    price = np.asarray(price, dtype=float)
    d = np.empty_like(price)
    d[:-1] = price[1:] - price[:-1]
    d[-1] = -price[-1]
    return np.maximum(d, 0.0), np.maximum(-d, 0.0)
