"""Seeded random scenarios and random rights portfolios for batch experiments."""

from __future__ import annotations

import numpy as np

from .costs import CostSchedule, PiecewiseLinearCost, QuadraticCost, Segment
from .dispatch import ScenarioSpec
from .network import Line
from .rights import Ecr, Fgr, Fsr, Ftr, RightsPortfolio, aggregate
from .sft import sft_check
from .storage import StorageFleet


def _round(x, step=0.01):
    return float(np.round(x / step) * step)


def random_network(rng: np.random.Generator, n: int) -> list[Line]:
    """Random spanning tree plus a few chords; capacities tight enough to bind."""
    lines = []
    order = rng.permutation(n)
    for k in range(1, n):
        a = int(order[k])
        b = int(order[rng.integers(0, k)])
        lines.append((a, b))
    extra = rng.integers(0, n)
    for _ in range(extra):
        a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
        lines.append((a, b))
    out = []
    for a, b in lines:
        x = _round(rng.uniform(0.5, 2.0))
        cap = _round(rng.uniform(0.5, 6.0))
        rev = _round(rng.uniform(0.5, 6.0)) if rng.random() < 0.3 else None
        out.append(Line(a, b, x, cap, rev))
    return out


def _generator(rng) -> QuadraticCost:
    return QuadraticCost(_round(rng.uniform(0.1, 2.0)), _round(rng.uniform(0.0, 8.0)),
                         0.0, _round(rng.uniform(2.0, 12.0)))


def _load_blocks(rng, scale: float) -> PiecewiseLinearCost:
    """One to three demand blocks; the deepest block has the lowest value."""
    nb = int(rng.integers(1, 4))
    widths = [_round(rng.uniform(0.5, 4.0) * scale) or 0.01 for _ in range(nb)]
    prices = sorted(_round(rng.uniform(5.0, 40.0)) for _ in range(nb))
    segs, start = [], -sum(widths)
    for w, p in zip(widths, prices):
        segs.append(Segment(p, _round(start), _round(start + w)))
        start += w
    segs[-1] = Segment(segs[-1].price, segs[-1].start, 0.0)
    return PiecewiseLinearCost(tuple(segs))


def _prosumer(rng) -> PiecewiseLinearCost:
    """Consumption valued at p_lo, supply offered at p_hi >= p_lo."""
    p_lo = _round(rng.uniform(2.0, 20.0))
    p_hi = _round(p_lo + rng.uniform(0.0, 15.0))
    return PiecewiseLinearCost((
        Segment(p_lo, -_round(rng.uniform(0.5, 3.0)), 0.0),
        Segment(p_hi, 0.0, _round(rng.uniform(0.5, 3.0))),
    ))


def random_scenario(rng: np.random.Generator, n: int | None = None, N: int | None = None,
                    name: str = "") -> ScenarioSpec:
    n = int(rng.integers(2, 6)) if n is None else n
    N = int(rng.integers(1, 7)) if N is None else N
    lines = random_network(rng, n)
    kinds = rng.choice(["gen", "load", "prosumer", "idle"], size=n, p=[0.35, 0.35, 0.2, 0.1])
    gens = [i for i in range(n) if kinds[i] == "gen"]
    if not gens:
        gens = [int(rng.integers(0, n))]
        kinds[gens[0]] = "gen"
    if "load" not in kinds:
        kinds[(gens[0] + 1 + int(rng.integers(0, n - 1))) % n] = "load"
    # a daily-shaped demand multiplier drives arbitrage between periods
    shape = 0.5 + rng.random(N)
    table = []
    for i in range(n):
        row = []
        base = _generator(rng) if kinds[i] == "gen" else None
        for k in range(N):
            if kinds[i] == "gen":
                row.append(base)
            elif kinds[i] == "load":
                row.append(_load_blocks(rng, shape[k]))
            elif kinds[i] == "prosumer":
                row.append(_prosumer(rng))
            else:
                row.append(QuadraticCost(0.0, 0.0, 0.0, 0.0))
        table.append(row)
    b = np.array([_round(rng.uniform(0.5, 5.0)) if rng.random() < 0.4 else 0.0 for _ in range(n)])
    return ScenarioSpec(tuple(lines), CostSchedule(table), StorageFleet(b), 0, 1.0, name)


def generate_corpus(seed: int, count: int) -> list[ScenarioSpec]:
    """``count`` scenarios with n <= 5 nodes and N <= 6 periods, reproducible from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [random_scenario(np.random.default_rng(c), name=f"corpus_{seed}_{q:04d}")
            for q, c in enumerate(children)]


def random_rights(rng: np.random.Generator, s: ScenarioSpec, transmission_only: bool) -> RightsPortfolio:
    n, N, r = s.n, s.N, 2 * s.m
    typical = float(np.median(s.c)) if r else 1.0
    rights = []
    for _ in range(int(rng.integers(1, 4))):
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        rights.append(Ftr(i, j, rng.uniform(0, typical, N)))
    for l in rng.choice(r, size=min(r, int(rng.integers(0, 3))), replace=False):
        rights.append(Fgr(int(l), rng.uniform(0, 1, N) * s.c[l]))
    if not transmission_only:
        for _ in range(int(rng.integers(1, 3))):
            i = int(rng.integers(0, n))
            rights.append(Fsr(i, rng.uniform(-1, 1, N) * max(1.0, float(s.b.max(initial=0.0)))))
        for i in s.storage.nodes:
            if rng.random() < 0.5:
                rights.append(Ecr(i, rng.uniform(0, 1, N) * s.b[i]))
    return aggregate(rights, n, N, r)


def sample_feasible_portfolio(rng: np.random.Generator, s: ScenarioSpec, transmission_only: bool,
                              max_halvings: int = 40, tol: float = 1e-9) -> RightsPortfolio:
    """Random rights scaled toward zero by halving until they pass the SFT.

    The default ``tol`` is tighter than the SFT default so that samples are
    feasible outright rather than to within a rounding margin.
    """
    p = random_rights(rng, s, transmission_only)
    for _ in range(max_halvings):
        if sft_check(p, s.polytope, s.storage, tol).feasible:
            return p
        p = p.scaled(0.5)
    return p.scaled(0.0)
