"""Per-node, per-period convex cost/benefit functions.

A cost function ``C(v)`` is defined on a closed interval ``[v_min, v_max]``
containing zero.  Positive ``v`` is generation (``C`` is its cost), negative
``v`` is consumption (``-C`` is its benefit).  ``C(0) = 0`` always.

Two shapes are supported: quadratic ``a*v**2 + b*v`` and piecewise linear
blocks ``[(price, start, end), ...]`` whose prices are nondecreasing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DomainViolation, ValidationError

log = logging.getLogger(__name__)

INF = math.inf


@dataclass(frozen=True)
class QuadraticCost:
    a: float
    b: float
    v_min: float = -INF
    v_max: float = INF

    kind = "quadratic"

    def __post_init__(self):
        if not (self.v_min <= 0.0 <= self.v_max):
            raise ValidationError(f"domain [{self.v_min}, {self.v_max}] must contain 0")
        if self.a < 0:
            raise ValidationError(f"quadratic coefficient a={self.a} < 0 is not convex")
        if math.isinf(self.v_min) and self.a > 0:
            raise ValidationError("a > 0 requires a finite v_min to stay nondecreasing")
        slope_at_min = self.b if math.isinf(self.v_min) else 2 * self.a * self.v_min + self.b
        if slope_at_min < 0:
            raise ValidationError(
                f"marginal cost {slope_at_min} < 0 at v_min; cost must be nondecreasing"
            )
        if slope_at_min == 0 and self.v_min < 0:
            log.warning("quadratic cost has zero marginal price at v_min=%s", self.v_min)

    def value(self, v: float) -> float:
        return self.a * v * v + self.b * v

    def slope(self, v: float) -> float:
        return 2.0 * self.a * v + self.b


@dataclass(frozen=True)
class Segment:
    price: float
    start: float
    end: float


@dataclass(frozen=True)
class PiecewiseLinearCost:
    """Convex blocks; ``segments`` are contiguous and sorted left to right."""

    segments: tuple[Segment, ...]

    kind = "pwl"

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValidationError("piecewise cost needs at least one segment")
        for k, s in enumerate(segs):
            if not s.end > s.start:
                raise ValidationError(f"segment {k} has nonpositive width [{s.start}, {s.end}]")
            if s.price < 0:
                raise ValidationError(f"segment {k} has negative marginal price {s.price}")
            if s.price == 0:
                log.warning("segment %d has zero marginal price", k)
            if k and abs(s.start - segs[k - 1].end) > 1e-12:
                raise ValidationError(f"segment {k} does not start where segment {k-1} ends")
            if k and s.price < segs[k - 1].price:
                raise ValidationError(
                    f"segment prices decrease ({segs[k-1].price} -> {s.price}); cost is not convex"
                )
        if not (segs[0].start <= 0.0 <= segs[-1].end):
            raise ValidationError(
                f"domain [{segs[0].start}, {segs[-1].end}] must contain 0"
            )

    @property
    def v_min(self) -> float:
        return self.segments[0].start

    @property
    def v_max(self) -> float:
        return self.segments[-1].end

    def value(self, v: float) -> float:
        total = 0.0
        for s in self.segments:
            if v >= 0:
                total += s.price * max(0.0, min(v, s.end) - max(0.0, s.start))
            else:
                total -= s.price * max(0.0, min(0.0, s.end) - max(v, s.start))
        return total

    def left_slope(self, v: float) -> float:
        for s in self.segments:
            if s.start < v <= s.end:
                return s.price
        return -INF

    def right_slope(self, v: float) -> float:
        for s in self.segments:
            if s.start <= v < s.end:
                return s.price
        return INF

    def affine_pieces(self) -> list[tuple[float, float]]:
        """(slope, intercept) pairs whose pointwise max is the cost on its domain."""
        return [(s.price, self.value(s.start) - s.price * s.start) for s in self.segments]


CostFunction = Union[QuadraticCost, PiecewiseLinearCost]


def linear_benefit(price: float, quantity: float) -> PiecewiseLinearCost:
    """Demand of ``quantity`` MW valued at ``price`` $/MWh, domain [-quantity, 0]."""
    return PiecewiseLinearCost((Segment(price, -quantity, 0.0),))


def fixed_zero() -> QuadraticCost:
    """Cost on the domain {0}: a node with neither supply nor demand."""
    return QuadraticCost(0.0, 0.0, 0.0, 0.0)


def _check_domain(f: CostFunction, v: float, tol: float) -> float:
    if v < f.v_min - tol or v > f.v_max + tol:
        raise DomainViolation(f"v={v} outside domain [{f.v_min}, {f.v_max}]")
    return min(max(v, f.v_min), f.v_max)


def evaluate_cost(f: CostFunction, v: float, tol: float = 0.0) -> float:
    """Exact integral of the marginal price from 0 to ``v``."""
    return f.value(_check_domain(f, v, tol))


def marginal_cost(f: CostFunction, v: float, tol: float = 0.0) -> tuple[float, float]:
    """Subdifferential of ``C`` plus the domain indicator at ``v``, as ``(lo, hi)``.

    At a domain endpoint the interval is open on that side (``-inf`` at
    ``v_min``, ``+inf`` at ``v_max``).  A positive ``tol`` widens the interval
    to every subgradient attained within ``tol`` of ``v``, so that a point a
    hair off a kink still reports both adjacent slopes.
    """
    v = _check_domain(f, v, tol)
    if isinstance(f, QuadraticCost):
        lo = -INF if v - tol <= f.v_min else f.slope(v - tol)
        hi = INF if v + tol >= f.v_max else f.slope(v + tol)
        return lo, hi
    lo = f.left_slope(v - tol) if v - tol > f.v_min else -INF
    hi = f.right_slope(v + tol) if v + tol < f.v_max else INF
    return lo, hi


def subgradient_gap(f: CostFunction, v: float, price: float, tol: float = 0.0) -> float:
    """Distance from ``price`` to the subdifferential interval at ``v``."""
    lo, hi = marginal_cost(f, v, tol)
    if price < lo:
        return lo - price
    if price > hi:
        return price - hi
    return 0.0


class CostSchedule:
    """n x N table of cost functions, indexed ``schedule[i][k]``."""

    def __init__(self, table: Sequence[Sequence[CostFunction]]):
        self.table = tuple(tuple(row) for row in table)
        lengths = {len(row) for row in self.table}
        if len(lengths) > 1:
            raise ValidationError("every node needs the same number of periods")
        for i, row in enumerate(self.table):
            for k, f in enumerate(row):
                if not isinstance(f, (QuadraticCost, PiecewiseLinearCost)):
                    raise ValidationError(f"costs[{i}][{k}] is not a cost function")

    @property
    def n(self) -> int:
        return len(self.table)

    @property
    def N(self) -> int:
        return len(self.table[0]) if self.table else 0

    def __getitem__(self, i):
        return self.table[i]

    def __iter__(self):
        return iter(self.table)

    def total(self, V) -> float:
        return sum(
            evaluate_cost(self.table[i][k], float(V[i][k]), tol=1e-7)
            for i in range(self.n)
            for k in range(self.N)
        )
