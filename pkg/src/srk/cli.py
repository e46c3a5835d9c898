"""Command-line front end: ``srk <command> ...``.

Exit codes: 0 success, 1 infeasible or inadequate verdict, 2 parse or
validation error, 3 solver failure.

CSV conventions: one row per node (or directed line), one column per period,
nodes and lines numbered from 1, values with 9 decimals.  Prices and duals
are $/MWh; injections and storage extractions are MW.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import generate_corpus
from .dispatch import KKT_TOL, EquilibriumSolution, ScenarioSpec, solve_dispatch
from .errors import (
    IdentityViolation, InfeasibleScenario, NotSimultaneouslyFeasible, ParseError, SolverFailure, SrkError,
    ValidationError,
)
from .hedging import decompose_exposure, settle_ledger, synthesize_hedge
from .rights import RightsPortfolio, aggregate
from .scenario import (
    _load, dump_json, parse_contract, parse_portfolio, scenario_from_dict, scenario_rights, scenario_to_dict,
)
from .settlement import settle
from .sft import max_rent, revenue_adequacy_audit, sft_check

log = logging.getLogger("srk")

EXIT_OK, EXIT_VERDICT, EXIT_PARSE, EXIT_SOLVER = 0, 1, 2, 3
DIGITS = 9
COMMANDS = ("dispatch", "settle", "sft-check", "max-rent", "hedge", "audit", "corpus")


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    out: str | None = None
    tol: float = KKT_TOL
    seed: int = 0
    count: int = 1
    transmission_only: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        for p in self.inputs:
            if p is not None and not Path(p).exists():
                raise ParseError(f"{p}: no such file")


def _fmt(x: float) -> str:
    return f"{round(float(x), DIGITS) + 0.0:.{DIGITS}f}"


def write_matrix(path: Path, M, label: str = "node") -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label] + [f"period_{k + 1}" for k in range(M.shape[1])])
        for r, row in enumerate(M):
            w.writerow([r + 1] + [_fmt(v) for v in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return round(float(obj) + 0.0, DIGITS)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _emit(out: Path | None, name: str, payload: dict) -> None:
    text = json.dumps(_clean(payload), indent=2)
    print(text)
    if out is not None:
        (out / name).write_text(text + "\n")


def _outdir(cfg: RunConfig) -> Path | None:
    if cfg.out is None:
        return None
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_scenario(path: str) -> tuple[ScenarioSpec, dict]:
    raw = _load(path)
    return scenario_from_dict(raw, Path(path).name), raw


def _portfolio(cfg: RunConfig, s: ScenarioSpec, raw: dict) -> RightsPortfolio:
    if len(cfg.inputs) > 1 and cfg.inputs[1] is not None:
        return parse_portfolio(cfg.inputs[1], s)
    embedded = scenario_rights(raw, s, Path(cfg.inputs[0]).name)
    if embedded is None:
        raise ParseError("no portfolio file given and the scenario has no rights block")
    return embedded


def _write_solution(out: Path, s: ScenarioSpec, sol: EquilibriumSolution) -> None:
    h = s.period_hours
    write_matrix(out / "V.csv", sol.V)
    write_matrix(out / "U.csv", sol.U)
    write_matrix(out / "lambda.csv", sol.Lambda / h)
    write_matrix(out / "gamma.csv", sol.gamma[None, :] / h, "row")
    write_matrix(out / "mu.csv", sol.mu / h, "line")
    write_matrix(out / "nu_upper.csv", sol.nu_upper / h)
    write_matrix(out / "nu_lower.csv", sol.nu_lower / h)


def _portfolio_records(p: RightsPortfolio, s: ScenarioSpec) -> list[dict]:
    recs = []
    for (i, j), prof in sorted(p.T.items()):
        recs.append({"type": "FTR", "injection_node": i + 1, "withdrawal_node": j + 1, "profile": prof})
    for l, prof in sorted(p.F.items()):
        recs.append({"type": "FGR", "line": l + 1, "profile": prof})
    for i, prof in sorted(p.S.items()):
        recs.append({"type": "FSR", "node": i + 1, "profile": prof})
    for i, prof in sorted(p.E.items()):
        recs.append({"type": "ECR", "node": i + 1, "profile": prof * s.period_hours})
    return recs


def cmd_dispatch(cfg: RunConfig) -> int:
    s, _ = _load_scenario(cfg.inputs[0])
    sol = solve_dispatch(s, cfg.tol)
    out = _outdir(cfg)
    if out is not None:
        _write_solution(out, s, sol)
    _emit(out, "kkt.json", {
        "scenario": s.name or Path(cfg.inputs[0]).stem,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "kkt_passed": sol.kkt.passed,
        "kkt_tol": sol.kkt.tol,
        "kkt_residuals": sol.kkt.residuals,
        "lambda": sol.Lambda / s.period_hours,
    })
    return EXIT_OK


def cmd_settle(cfg: RunConfig) -> int:
    s, _ = _load_scenario(cfg.inputs[0])
    sol = solve_dispatch(s, cfg.tol)
    rep = settle(s, sol)
    out = _outdir(cfg)
    if out is not None:
        write_matrix(out / "payments.csv", rep.per_node_payments)
    _emit(out, "settlement.json", rep.summary())
    return EXIT_OK


def cmd_sft_check(cfg: RunConfig) -> int:
    s, raw = _load_scenario(cfg.inputs[0])
    p = _portfolio(cfg, s, raw)
    v = sft_check(p, s.polytope, s.storage, cfg.tol)
    out = _outdir(cfg)
    if out is not None and v.witness is not None and v.feasible:
        write_matrix(out / "witness.csv", v.witness)
    _emit(out, "sft.json", {
        "feasible": v.feasible,
        "violation": v.violation,
        "binding_constraints": v.binding_constraints,
        "certificate": v.certificate,
        "witness": v.witness if v.feasible else None,
    })
    return EXIT_OK if v.feasible else EXIT_VERDICT


def cmd_max_rent(cfg: RunConfig) -> int:
    s, _ = _load_scenario(cfg.inputs[0])
    sol = solve_dispatch(s, cfg.tol)
    r = max_rent(sol, s.polytope, s.storage, cfg.transmission_only)
    out = _outdir(cfg)
    if out is not None:
        dump_json(_clean(_portfolio_records(r.portfolio, s)), out / "portfolio.json")
    _emit(out, "max_rent.json", {
        "transmission_only": cfg.transmission_only,
        "rent": r.rent,
        "target": r.target,
        "gap": r.gap,
        "lp_rent": r.lp_rent,
        "closed_form_rent": r.closed_form_rent,
        "used_closed_form": r.used_closed_form,
        "tight": r.tight,
        "portfolio": _portfolio_records(r.portfolio, s),
    })
    return EXIT_OK if r.tight else EXIT_VERDICT


def cmd_hedge(cfg: RunConfig) -> int:
    s, _ = _load_scenario(cfg.inputs[0])
    c = parse_contract(cfg.inputs[1], s.n)
    if c.N != s.N:
        raise ValidationError(f"contract covers {c.N} periods, scenario has {s.N}")
    sol = solve_dispatch(s, cfg.tol)
    prices = sol.Lambda / s.period_hours
    pkg = synthesize_hedge(c)
    ledger = settle_ledger(pkg, c, prices)
    exposure = decompose_exposure(c, prices)
    rights = [pkg.fsr] + ([pkg.ftr] if pkg.ftr is not None else [])
    verdict = sft_check(aggregate(rights, s.n, s.N, 2 * s.m), s.polytope, s.storage, cfg.tol)
    out = _outdir(cfg)
    text = ledger.to_csv(DIGITS)
    if out is not None:
        (out / "ledger.csv").write_text(text)
    print(text, end="")
    _emit(out, "hedge.json", {
        "ftr": None if pkg.ftr is None else {
            "injection_node": pkg.ftr.injection_node + 1, "withdrawal_node": pkg.ftr.withdrawal_node + 1,
            "profile": pkg.ftr.profile},
        "fsr": {"node": pkg.fsr.node + 1, "profile": pkg.fsr.profile},
        "cfd_payment": pkg.cfd_payment(prices),
        "exposure": exposure.__dict__,
        "ledger_residuals": ledger.residuals(c),
        "package_simultaneously_feasible": verdict.feasible,
    })
    return EXIT_OK


def cmd_audit(cfg: RunConfig) -> int:
    s, raw = _load_scenario(cfg.inputs[0])
    p = _portfolio(cfg, s, raw)
    sol = solve_dispatch(s, cfg.tol)
    rep = settle(s, sol)
    out = _outdir(cfg)
    try:
        rec = revenue_adequacy_audit(p, sol, rep, s.polytope, s.storage, cfg.tol)
    except NotSimultaneouslyFeasible as exc:
        _emit(out, "audit.json", {
            "status": "NotSimultaneouslyFeasible",
            "message": str(exc),
            "certificate": exc.verdict.certificate if exc.verdict is not None else None,
        })
        return EXIT_VERDICT
    summary = rec.summary()
    summary["status"] = "Pass" if rec.adequate else "Fail"
    _emit(out, "audit.json", summary)
    return EXIT_OK if rec.adequate else EXIT_VERDICT


def cmd_corpus(cfg: RunConfig) -> int:
    out = _outdir(cfg) or Path(".")
    rows = []
    for s in generate_corpus(cfg.seed, cfg.count):
        dump_json(scenario_to_dict(s), out / f"{s.name}.json")
        sol = solve_dispatch(s, cfg.tol)
        rep = settle(s, sol)
        rows.append([s.name, s.n, s.N, s.m, _fmt(sol.objective), _fmt(rep.ms), _fmt(rep.tcs), _fmt(rep.scs),
                     f"{sol.kkt.max_residual:.3e}"])
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "n", "N", "m", "objective", "ms", "tcs", "scs", "kkt_max_residual"])
        w.writerows(rows)
    print(f"wrote {len(rows)} scenarios to {out}")
    return EXIT_OK


HANDLERS = {
    "dispatch": cmd_dispatch,
    "settle": cmd_settle,
    "sft-check": cmd_sft_check,
    "max-rent": cmd_max_rent,
    "hedge": cmd_hedge,
    "audit": cmd_audit,
    "corpus": cmd_corpus,
}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except InfeasibleScenario as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (SolverFailure, IdentityViolation) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except NotSimultaneouslyFeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except (ParseError, ValidationError, SrkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for CSV/JSON artifacts")
    common.add_argument("--tol", type=float, help="tolerance override (default: SRK_TOL or 1e-6)")

    ap = argparse.ArgumentParser(prog="srk", description="Storage and transmission rights toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("dispatch", "settle"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("scenario")
    for name in ("sft-check", "audit"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("scenario")
        p.add_argument("portfolio", nargs="?", help="rights file; defaults to the scenario's rights block")
    p = sub.add_parser("max-rent", parents=[common])
    p.add_argument("scenario")
    p.add_argument("--transmission-only", action="store_true")
    p = sub.add_parser("hedge", parents=[common])
    p.add_argument("scenario")
    p.add_argument("contract")
    p = sub.add_parser("corpus", parents=[common])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    return ap


def _default_tol() -> float:
    env = os.environ.get("SRK_TOL")
    if env is None:
        return KKT_TOL
    try:
        return float(env)
    except ValueError:
        raise ValidationError(f"SRK_TOL={env!r} is not a number") from None


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        tol = args.tol if args.tol is not None else _default_tol()
        inputs = [getattr(args, k) for k in ("scenario", "portfolio", "contract") if hasattr(args, k)]
        cfg = RunConfig(
            args.command, inputs, args.out, tol,
            seed=getattr(args, "seed", 0), count=getattr(args, "count", 1),
            transmission_only=getattr(args, "transmission_only", False),
        )
        if cfg.command == "corpus" and cfg.count < 0:
            raise ValidationError("count must be nonnegative")
    except SrkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
