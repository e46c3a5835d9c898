"""JSON ingestion and emission for scenarios, portfolios and contracts.

Files use 1-based node and line numbers; the Python objects are 0-based.
Directed line ``l`` in a file is line ``l`` forward for ``l <= m`` and line
``l - m`` reversed for ``l > m``.

Scenario files state costs in $/MWh, storage in MWh and flows in MW over
periods of ``period_hours`` hours.  On load everything is converted to
per-period units: cost coefficients are multiplied by the period length and
storage capacities (and ECR profiles) are divided by it, so that the models
work in MW and MW-periods throughout.  Prices out of the solver are therefore
$ per MW-period; divide by ``period_hours`` to quote $/MWh.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from .costs import CostSchedule, PiecewiseLinearCost, QuadraticCost, Segment
from .dispatch import ScenarioSpec
from .errors import InvalidIndex, ParseError, SrkError, ValidationError
from .hedging import BilateralContract
from .network import Line
from .rights import Ecr, Fgr, Fsr, Ftr, RightsPortfolio, aggregate
from .storage import StorageFleet

log = logging.getLogger(__name__)


def _load(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _field(obj, key, where: str, kind=None, default=...):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        if default is ...:
            raise ParseError(f"{where}.{key}: missing field")
        return default
    val = obj[key]
    if kind is not None and val is not None:
        ok = isinstance(val, kind) and not isinstance(val, bool)
        if not ok:
            raise ParseError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


_NUM = (int, float)


def _num(obj, key, where, default=...) -> float:
    val = _field(obj, key, where, _NUM, default)
    return val if val is None else float(val)


def _bound(val, where: str, side: float) -> float:
    if val is None:
        return side
    if isinstance(val, str) and val.lower() in ("inf", "+inf", "-inf", "infinity", "-infinity"):
        return float(val.replace("inity", ""))
    if isinstance(val, bool) or not isinstance(val, _NUM):
        raise ParseError(f"{where}: expected a number or null")
    return float(val)


def _profile(obj, key, where, N: int | None) -> np.ndarray:
    val = _field(obj, key, where, list)
    if not all(isinstance(x, _NUM) and not isinstance(x, bool) for x in val):
        raise ParseError(f"{where}.{key}: profile entries must be numbers")
    arr = np.array(val, dtype=float)
    if N is not None and len(arr) != N:
        raise ValidationError(f"{where}.{key}: profile has {len(arr)} periods, horizon is {N}")
    return arr


def _node(obj, key, where, n: int) -> int:
    val = _field(obj, key, where, int)
    if not 1 <= val <= n:
        raise InvalidIndex(f"{where}.{key}: node {val} outside 1..{n}")
    return val - 1


def parse_cost(d, where: str, hours: float = 1.0):
    kind = _field(d, "type", where, str)
    try:
        if kind == "quadratic":
            return QuadraticCost(
                hours * _num(d, "a", where, 0.0),
                hours * _num(d, "b", where, 0.0),
                _bound(d.get("vmin"), f"{where}.vmin", -math.inf),
                _bound(d.get("vmax"), f"{where}.vmax", math.inf),
            )
        if kind == "pwl":
            segs = _field(d, "segments", where, list)
            if not segs:
                raise ValidationError(f"{where}.segments: at least one segment required")
            return PiecewiseLinearCost(tuple(
                Segment(hours * _num(s, "price", f"{where}.segments[{q}]"),
                        _num(s, "from", f"{where}.segments[{q}]"),
                        _num(s, "to", f"{where}.segments[{q}]"))
                for q, s in enumerate(segs)
            ))
    except ValidationError as exc:
        if str(exc).startswith(where):
            raise
        raise type(exc)(f"{where}: {exc}") from exc
    raise ParseError(f"{where}.type: unknown cost type {kind!r} (expected 'quadratic' or 'pwl')")


def scenario_from_dict(d: dict, source: str = "scenario") -> ScenarioSpec:
    n = _field(d, "n", source, int)
    N = _field(d, "N", source, int)
    if n < 1 or N < 1:
        raise ValidationError(f"{source}: n and N must be positive")
    hours = _num(d, "period_hours", source, 1.0)
    if not hours > 0:
        raise ValidationError(f"{source}.period_hours: must be positive")
    ref = _field(d, "reference_bus", source, int, 1)
    if not 1 <= ref <= n:
        raise InvalidIndex(f"{source}.reference_bus: {ref} outside 1..{n}")

    lines = []
    for l, rec in enumerate(_field(d, "lines", source, list)):
        where = f"{source}.lines[{l}]"
        i, j = _node(rec, "from", where, n), _node(rec, "to", where, n)
        x = _num(rec, "reactance", where)
        cap = _num(rec, "capacity", where)
        rev = _num(rec, "capacity_reverse", where, None)
        try:
            lines.append(Line(i, j, x, cap, rev))
        except ValidationError as exc:
            raise type(exc)(f"{where}: {exc}") from exc

    costs_raw = _field(d, "costs", source, list)
    if len(costs_raw) != n:
        raise ValidationError(f"{source}.costs: {len(costs_raw)} nodes listed, n = {n}")
    table = []
    for i, row in enumerate(costs_raw):
        if isinstance(row, dict):
            f = parse_cost(row, f"{source}.costs[{i}]", hours)
            table.append([f] * N)
            continue
        if not isinstance(row, list) or len(row) != N:
            raise ValidationError(f"{source}.costs[{i}]: need one cost per period ({N})")
        table.append([parse_cost(c, f"{source}.costs[{i}][{k}]", hours) for k, c in enumerate(row)])

    storage_raw = _field(d, "storage", source, list, None)
    if storage_raw is None:
        b = np.zeros(n)
    else:
        if len(storage_raw) != n or not all(isinstance(x, _NUM) and not isinstance(x, bool) for x in storage_raw):
            raise ValidationError(f"{source}.storage: need {n} numeric capacities")
        b = np.array(storage_raw, dtype=float)
        if np.any(b < 0):
            raise ValidationError(f"{source}.storage[{int(np.argmax(b < 0))}]: capacity must be nonnegative")
        b = b / hours
    name = _field(d, "name", source, str, "")
    try:
        return ScenarioSpec(tuple(lines), CostSchedule(table), StorageFleet(b), ref - 1, hours, name)
    except SrkError as exc:
        raise type(exc)(f"{source}: {exc}") from exc


def parse_scenario(path) -> ScenarioSpec:
    d = _load(path)
    return scenario_from_dict(d, Path(path).name)


def portfolio_from_records(records, s: ScenarioSpec, source: str = "portfolio") -> RightsPortfolio:
    if isinstance(records, dict):
        records = _field(records, "rights", source, list)
    if not isinstance(records, list):
        raise ParseError(f"{source}: expected a list of rights")
    n, N, m = s.n, s.N, s.m
    rights = []
    for q, rec in enumerate(records):
        where = f"{source}[{q}]"
        kind = str(_field(rec, "type", where, str)).upper()
        prof = _profile(rec, "profile", where, N)
        try:
            if kind == "FTR":
                key_i = "injection_node" if "injection_node" in rec else "from"
                key_j = "withdrawal_node" if "withdrawal_node" in rec else "to"
                rights.append(Ftr(_node(rec, key_i, where, n), _node(rec, key_j, where, n), prof))
            elif kind == "FGR":
                l = _field(rec, "line", where, int)
                if not 1 <= l <= 2 * m:
                    raise InvalidIndex(f"{where}.line: {l} outside 1..{2 * m}")
                rights.append(Fgr(l - 1, prof))
            elif kind == "FSR":
                node = _node(rec, "node", where, n)
                if abs(prof.sum()) > 1e-9:
                    log.warning("%s: FSR profile sums to %g, a net forward energy position", where, prof.sum())
                rights.append(Fsr(node, prof))
            elif kind == "ECR":
                rights.append(Ecr(_node(rec, "node", where, n), prof / s.period_hours))
            else:
                raise ParseError(f"{where}.type: unknown right type {kind!r}")
        except ValidationError as exc:
            if str(exc).startswith(where):
                raise
            raise type(exc)(f"{where}: {exc}") from exc
    return aggregate(rights, n, N, 2 * m)


def parse_portfolio(path, s: ScenarioSpec) -> RightsPortfolio:
    return portfolio_from_records(_load(path), s, Path(path).name)


def scenario_rights(d: dict, s: ScenarioSpec, source: str = "scenario") -> RightsPortfolio | None:
    """The optional ``rights`` block embedded in a scenario file."""
    if "rights" not in d:
        return None
    return portfolio_from_records(d["rights"], s, f"{source}.rights")


def contract_from_dict(d: dict, source: str = "contract", n: int | None = None) -> BilateralContract:
    profiles = d.get("profiles", d)
    i = _field(d, "supplier_node", source, int)
    j = _field(d, "demander_node", source, int)
    for key, val in (("supplier_node", i), ("demander_node", j)):
        if val < 1 or (n is not None and val > n):
            raise InvalidIndex(f"{source}.{key}: node {val} outside 1..{n if n else '?'}")
    q_i = _profile(profiles, "q_i", source, None)
    q_j = _profile(profiles, "q_j", source, None)
    lam = _num(d, "lambda_c", source)
    q_c = _num(d, "q_c", source, None)
    try:
        return BilateralContract(i - 1, j - 1, q_i, q_j, lam, q_c)
    except SrkError as exc:
        raise type(exc)(f"{source}: {exc}") from exc


def parse_contract(path, n: int | None = None) -> BilateralContract:
    return contract_from_dict(_load(path), Path(path).name, n)


# ---------------------------------------------------------------------------
# emission


def _num_out(x: float):
    if math.isinf(x):
        return None
    return float(x)


def cost_to_dict(f, hours: float = 1.0) -> dict:
    if isinstance(f, QuadraticCost):
        return {"type": "quadratic", "a": f.a / hours, "b": f.b / hours,
                "vmin": _num_out(f.v_min), "vmax": _num_out(f.v_max)}
    return {"type": "pwl", "segments": [
        {"price": seg.price / hours, "from": seg.start, "to": seg.end} for seg in f.segments
    ]}


def scenario_to_dict(s: ScenarioSpec) -> dict:
    h = s.period_hours
    out = {"n": s.n, "N": s.N}
    if s.name:
        out = {"name": s.name, **out}
    if h != 1.0:
        out["period_hours"] = h
    if s.reference_bus:
        out["reference_bus"] = s.reference_bus + 1
    out["lines"] = []
    for ln in s.lines:
        rec = {"from": ln.from_node + 1, "to": ln.to_node + 1, "reactance": ln.reactance, "capacity": ln.capacity}
        if ln.capacity_reverse is not None:
            rec["capacity_reverse"] = ln.capacity_reverse
        out["lines"].append(rec)
    out["costs"] = [[cost_to_dict(f, h) for f in row] for row in s.costs]
    out["storage"] = [float(x) * h for x in s.b]
    return out


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
