"""Financial transmission and storage rights, portfolios and their rents."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .dispatch import EquilibriumSolution
from .errors import DimensionMismatch, InvalidIndex, ValidationError


def _profile(values, nonnegative: bool, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} profile has non-finite entries")
    if nonnegative and np.any(arr < 0):
        raise ValidationError(f"{what} profile must be nonnegative")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Ftr:
    """Point-to-point right paying (lambda_j - lambda_i)' t."""

    injection_node: int
    withdrawal_node: int
    profile: np.ndarray

    def __post_init__(self):
        if self.injection_node == self.withdrawal_node:
            raise ValidationError("FTR injection and withdrawal nodes must differ")
        object.__setattr__(self, "profile", _profile(self.profile, True, "FTR"))


@dataclass(frozen=True)
class Fgr:
    """Flowgate right on directed line row ``line`` (0..2m-1), paying mu_l' f."""

    line: int
    profile: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "profile", _profile(self.profile, True, "FGR"))


@dataclass(frozen=True)
class Fsr:
    """Storage right paying lambda_i' s; the profile is signed."""

    node: int
    profile: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "profile", _profile(self.profile, False, "FSR"))


@dataclass(frozen=True)
class Ecr:
    """Energy capacity right paying nu_upper_i' e."""

    node: int
    profile: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "profile", _profile(self.profile, True, "ECR"))


Right = Union[Ftr, Fgr, Fsr, Ecr]


@dataclass
class RightsPortfolio:
    n: int
    N: int
    n_directed: int
    T: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    F: dict[int, np.ndarray] = field(default_factory=dict)
    S: dict[int, np.ndarray] = field(default_factory=dict)
    E: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        """Net injection vectors, column k is t(k)."""
        out = np.zeros((self.n, self.N))
        for (i, j), prof in self.T.items():
            out[i] += prof
            out[j] -= prof
        return out

    @property
    def f(self) -> np.ndarray:
        out = np.zeros((self.n_directed, self.N))
        for l, prof in self.F.items():
            out[l] += prof
        return out

    @property
    def s(self) -> np.ndarray:
        out = np.zeros((self.n, self.N))
        for i, prof in self.S.items():
            out[i] += prof
        return out

    @property
    def e(self) -> np.ndarray:
        out = np.zeros((self.n, self.N))
        for i, prof in self.E.items():
            out[i] += prof
        return out

    @property
    def transmission_only(self) -> bool:
        return not self.S and not self.E

    def is_empty(self) -> bool:
        return not (self.T or self.F or self.S or self.E)

    def rights(self) -> list[Right]:
        out: list[Right] = [Ftr(i, j, p) for (i, j), p in sorted(self.T.items())]
        out += [Fgr(l, p) for l, p in sorted(self.F.items())]
        out += [Fsr(i, p) for i, p in sorted(self.S.items())]
        out += [Ecr(i, p) for i, p in sorted(self.E.items())]
        return out

    def scaled(self, alpha: float) -> "RightsPortfolio":
        if alpha < 0:
            raise ValidationError("portfolio scale must be nonnegative")
        return RightsPortfolio(
            self.n, self.N, self.n_directed,
            {k: alpha * v for k, v in self.T.items()},
            {k: alpha * v for k, v in self.F.items()},
            {k: alpha * v for k, v in self.S.items()},
            {k: alpha * v for k, v in self.E.items()},
        )

    def __add__(self, other: "RightsPortfolio") -> "RightsPortfolio":
        return combine(self, other)


def _add(store: dict, key, prof: np.ndarray) -> None:
    store[key] = store[key] + prof if key in store else prof.copy()


def aggregate(rights: Iterable[Right], n: int, N: int, n_directed: int) -> RightsPortfolio:
    """Sum rights of the same type and key into a portfolio."""
    p = RightsPortfolio(n, N, n_directed)
    for r in rights:
        if len(r.profile) != N:
            raise DimensionMismatch(f"{type(r).__name__} profile has length {len(r.profile)}, horizon is {N}")
        if isinstance(r, Ftr):
            for node in (r.injection_node, r.withdrawal_node):
                if not 0 <= node < n:
                    raise InvalidIndex(f"FTR node {node} outside 0..{n-1}")
            _add(p.T, (r.injection_node, r.withdrawal_node), r.profile)
        elif isinstance(r, Fgr):
            if not 0 <= r.line < n_directed:
                raise InvalidIndex(f"FGR line {r.line} outside 0..{n_directed-1}")
            _add(p.F, r.line, r.profile)
        elif isinstance(r, (Fsr, Ecr)):
            if not 0 <= r.node < n:
                raise InvalidIndex(f"{type(r).__name__} node {r.node} outside 0..{n-1}")
            _add(p.S if isinstance(r, Fsr) else p.E, r.node, r.profile)
        else:
            raise ValidationError(f"unknown right {r!r}")
    return p


def combine(p1: RightsPortfolio, p2: RightsPortfolio) -> RightsPortfolio:
    if (p1.n, p1.N, p1.n_directed) != (p2.n, p2.N, p2.n_directed):
        raise DimensionMismatch("portfolios are defined on different networks or horizons")
    return aggregate(p1.rights() + p2.rights(), p1.n, p1.N, p1.n_directed)


def empty_portfolio(n: int, N: int, n_directed: int) -> RightsPortfolio:
    return RightsPortfolio(n, N, n_directed)


def portfolio_from_vectors(t, f=None, s=None, e=None, hub: int = 0, atol: float = 1e-12) -> RightsPortfolio:
    """Realise injection/flowgate/storage vectors as concrete rights.

    A balanced ``t`` (n x N) becomes hub-and-spoke FTRs: node i gets an FTR
    to ``hub`` carrying the positive part of t_i and one from ``hub`` carrying
    the negative part.  Negative round-off in f and e is clipped.
    """
    t = np.asarray(t, dtype=float)
    n, N = t.shape
    f = np.zeros((0, N)) if f is None else np.asarray(f, dtype=float)
    rights: list[Right] = []
    for i in range(n):
        if i == hub:
            continue
        pos, neg = np.maximum(t[i], 0.0), np.maximum(-t[i], 0.0)
        if pos.max() > atol:
            rights.append(Ftr(i, hub, pos))
        if neg.max() > atol:
            rights.append(Ftr(hub, i, neg))
    for l in range(f.shape[0]):
        prof = np.maximum(f[l], 0.0)
        if prof.max() > atol:
            rights.append(Fgr(l, prof))
    if s is not None:
        for i, prof in enumerate(np.asarray(s, dtype=float)):
            if np.abs(prof).max() > atol:
                rights.append(Fsr(i, prof))
    if e is not None:
        for i, prof in enumerate(np.asarray(e, dtype=float)):
            prof = np.maximum(prof, 0.0)
            if prof.max() > atol:
                rights.append(Ecr(i, prof))
    return aggregate(rights, n, N, f.shape[0])


@dataclass
class RentStatement:
    per_key: dict[tuple[str, object], float]
    ftr: float
    fgr: float
    fsr: float
    ecr: float

    @property
    def phi(self) -> float:
        """Transmission rights rent."""
        return self.ftr + self.fgr

    @property
    def sigma(self) -> float:
        """Storage rights rent."""
        return self.fsr + self.ecr

    @property
    def total(self) -> float:
        return self.phi + self.sigma


def rent(p: RightsPortfolio, sol: EquilibriumSolution) -> RentStatement:
    if sol.N != p.N or sol.n != p.n:
        raise DimensionMismatch(f"portfolio horizon/nodes ({p.n}, {p.N}) vs solution ({sol.n}, {sol.N})")
    if p.F and sol.mu.shape[0] != p.n_directed:
        raise DimensionMismatch("portfolio line count does not match the solution")
    Lam = sol.Lambda
    per_key: dict[tuple[str, object], float] = {}
    for (i, j), prof in p.T.items():
        per_key[("FTR", (i, j))] = float((Lam[j] - Lam[i]) @ prof)
    for l, prof in p.F.items():
        per_key[("FGR", l)] = float(sol.mu[l] @ prof)
    for i, prof in p.S.items():
        per_key[("FSR", i)] = float(Lam[i] @ prof)
    for i, prof in p.E.items():
        per_key[("ECR", i)] = float(sol.nu_upper[i] @ prof)

    def total(kind):
        return float(sum(v for (k, _), v in per_key.items() if k == kind))

    return RentStatement(per_key, total("FTR"), total("FGR"), total("FSR"), total("ECR"))
