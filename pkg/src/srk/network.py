"""DC network model: lines, shift factors and the feasible-injection polytope."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DimensionMismatch, DisconnectedGraph, InvalidReactance, ValidationError

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class Line:
    from_node: int
    to_node: int
    reactance: float
    capacity: float
    # reverse-direction rating; None means symmetric
    capacity_reverse: float | None = None

    def __post_init__(self):
        if self.from_node == self.to_node:
            raise ValidationError(f"line {self.from_node}->{self.to_node} is a self-loop")
        if self.capacity < 0 or (self.capacity_reverse is not None and self.capacity_reverse < 0):
            raise ValidationError(f"line {self.from_node}->{self.to_node} has negative capacity")

    @property
    def reverse_capacity(self) -> float:
        return self.capacity if self.capacity_reverse is None else self.capacity_reverse


@dataclass(frozen=True)
class ShiftFactorMatrix:
    """2m x n map from nodal injections to directed line flows.

    Row ``l`` is the forward direction of line ``l``; row ``m + l`` is its
    exact negation.  Columns are shifted so that ``H @ 1 = 0``.
    """

    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def m(self) -> int:
        return self.entries.shape[0] // 2

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def forward(self) -> np.ndarray:
        return self.entries[: self.m]

    def __matmul__(self, other):
        return self.entries @ other


def _check_lines(lines: Sequence[Line], n: int) -> None:
    for k, ln in enumerate(lines):
        if not (0 <= ln.from_node < n and 0 <= ln.to_node < n):
            raise ValidationError(f"line {k} references a node outside 0..{n-1}")
        if not ln.reactance > 0:
            raise InvalidReactance(f"line {k} has reactance {ln.reactance} <= 0")


def incidence_matrix(lines: Sequence[Line], n: int) -> np.ndarray:
    A = np.zeros((len(lines), n))
    for k, ln in enumerate(lines):
        A[k, ln.from_node] = 1.0
        A[k, ln.to_node] = -1.0
    return A


def is_connected(lines: Sequence[Line], n: int) -> bool:
    if n <= 1:
        return True
    rows = [ln.from_node for ln in lines]
    cols = [ln.to_node for ln in lines]
    adj = csr_matrix((np.ones(len(lines)), (rows, cols)), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


def build_shift_factors(lines: Sequence[Line], n: int, reference_bus: int = 0) -> ShiftFactorMatrix:
    """PTDF matrix from the reduced nodal susceptance matrix.

    The reference bus row/column is deleted, the reduced system solved and
    the result re-embedded; columns are then centred so that a uniform
    injection shift moves no flow.  Flows ``H @ v`` for balanced ``v`` do not
    depend on ``reference_bus``.
    """
    _check_lines(lines, n)
    if not 0 <= reference_bus < n:
        raise ValidationError(f"reference bus {reference_bus} outside 0..{n-1}")
    if not is_connected(lines, n):
        raise DisconnectedGraph(f"line graph on {n} nodes is not connected")
    A = incidence_matrix(lines, n)
    y = np.array([1.0 / ln.reactance for ln in lines])
    B = A.T @ (y[:, None] * A)
    keep = [i for i in range(n) if i != reference_bus]
    X = np.zeros((n, n))
    if keep:
        X[np.ix_(keep, keep)] = np.linalg.inv(B[np.ix_(keep, keep)])
    Hf = (y[:, None] * A) @ X
    Hf = Hf - Hf.mean(axis=1, keepdims=True)
    return ShiftFactorMatrix(np.vstack([Hf, -Hf]))


def capacity_vector(lines: Sequence[Line]) -> np.ndarray:
    fwd = [ln.capacity for ln in lines]
    rev = [ln.reverse_capacity for ln in lines]
    return np.array(fwd + rev, dtype=float)


@dataclass(frozen=True)
class InjectionPolytope:
    """P(c) = {v : H v <= c, 1'v = 0}."""

    H: ShiftFactorMatrix
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.shape != (self.H.entries.shape[0],):
            raise DimensionMismatch(f"capacity vector has shape {c.shape}, need ({self.H.entries.shape[0]},)")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_lines(cls, lines: Sequence[Line], n: int, reference_bus: int = 0) -> "InjectionPolytope":
        return cls(build_shift_factors(lines, n, reference_bus), capacity_vector(lines))

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def m(self) -> int:
        return self.H.m

    def derated(self, f: np.ndarray) -> "InjectionPolytope":
        return InjectionPolytope(self.H, self.c - np.asarray(f, dtype=float))


@dataclass
class FeasibilityVerdict:
    feasible: bool
    violations: list[tuple[str, int, float]] = field(default_factory=list)

    def __bool__(self):
        return self.feasible

    @property
    def worst(self) -> float:
        return max((mag for _, _, mag in self.violations), default=0.0)


def check_injection_feasible(v, poly: InjectionPolytope, tol: float = DEFAULT_TOL) -> FeasibilityVerdict:
    """Membership test for P(c); each violated row is listed with its magnitude."""
    v = np.asarray(v, dtype=float)
    if v.shape != (poly.n,):
        raise DimensionMismatch(f"injection has shape {v.shape}, need ({poly.n},)")
    violations = []
    imbalance = float(v.sum())
    if abs(imbalance) > tol:
        violations.append(("balance", -1, abs(imbalance)))
    excess = poly.H @ v - poly.c
    for row in np.flatnonzero(excess > tol):
        violations.append(("flow", int(row), float(excess[row])))
    return FeasibilityVerdict(not violations, violations)
