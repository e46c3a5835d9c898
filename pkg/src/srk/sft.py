"""Simultaneous feasibility of rights portfolios, maximum rents and adequacy audits.

A portfolio (T, F, S, E) is simultaneously feasible when some storage
reshaping Q exists with

    t(k) - s(k) + q(k) in P(c - f(k))   for every period k,
    q_i in U(b_i - e_i)                 for every node i.

Nodes with no device have U(0) = {0}, so only storage nodes carry q variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispatch import EquilibriumSolution
from .errors import DimensionMismatch, IllPosedDerating, NotSimultaneouslyFeasible, SolverFailure
from .network import InjectionPolytope, check_injection_feasible
from .rights import RentStatement, RightsPortfolio, portfolio_from_vectors, rent
from .settlement import SettlementReport, merchandising_surplus
from .solver import ConvexProgram, Status, find_feasible_point, solve_convex
from .storage import StorageFleet, check_storage_feasible, cumulative_matrix

SFT_TOL = 1e-6
TIGHTNESS_TOL = 1e-4


@dataclass
class SftVerdict:
    feasible: bool
    witness: np.ndarray | None = None  # n x N storage injections when feasible
    certificate: dict[str, float] | None = None  # row label -> Farkas multiplier
    binding_constraints: list[str] = field(default_factory=list)
    violation: float = 0.0

    def __bool__(self):
        return self.feasible


def _check_dims(p: RightsPortfolio, net: InjectionPolytope, fleet: StorageFleet) -> None:
    if p.n != net.n or fleet.n != net.n:
        raise DimensionMismatch(f"portfolio has {p.n} nodes, network {net.n}, storage fleet {fleet.n}")
    if p.n_directed != 2 * net.m:
        raise DimensionMismatch(f"portfolio has {p.n_directed} directed lines, network {2 * net.m}")


def _check_derating(f: np.ndarray, e: np.ndarray, c: np.ndarray, b: np.ndarray, tol: float) -> None:
    over_f = f - c[:, None]
    if over_f.size and over_f.max() > tol:
        l, k = np.unravel_index(np.argmax(over_f), over_f.shape)
        raise IllPosedDerating(f"flowgate rights exceed capacity on directed line {l} in period {k}")
    over_e = e - b[:, None]
    if over_e.size and over_e.max() > tol:
        i, k = np.unravel_index(np.argmax(over_e), over_e.shape)
        raise IllPosedDerating(f"energy capacity rights exceed storage capacity at node {i} in period {k}")


@dataclass(frozen=True)
class _SftProgram:
    prog: ConvexProgram
    nodes: tuple[int, ...]
    labels_eq: tuple[str, ...]
    labels_in: tuple[str, ...]


def _build_sft_program(p: RightsPortfolio, net: InjectionPolytope, fleet: StorageFleet) -> _SftProgram:
    n, N = p.n, p.N
    H, c, b = net.H.entries, net.c, fleet.b
    nodes = tuple(fleet.nodes)
    ns = len(nodes)
    nv = ns * N
    base = p.t - p.s  # n x N
    cap_line = c[:, None] - p.f - H @ base
    cap_store = np.maximum(b[:, None] - p.e, 0.0)
    L = cumulative_matrix(N)

    A_eq = np.zeros((N, nv))
    b_eq = -base.sum(axis=0)
    rows_in, rhs_in, labels_in = [], [], []
    for k in range(N):
        for j in range(ns):
            A_eq[k, k * ns + j] = 1.0
    for k in range(N):
        for l in range(H.shape[0]):
            row = np.zeros(nv)
            for j, node in enumerate(nodes):
                row[k * ns + j] = H[l, node]
            rows_in.append(row)
            rhs_in.append(cap_line[l, k])
            labels_in.append(f"line[{l},{k}]")
    for j, node in enumerate(nodes):
        cols = [k * ns + j for k in range(N)]
        for k in range(N):
            row = np.zeros(nv)
            row[cols] = -L[k]
            rows_in.append(row)
            rhs_in.append(0.0)
            labels_in.append(f"storage_empty[{node},{k}]")
            row = np.zeros(nv)
            row[cols] = L[k]
            rows_in.append(row)
            rhs_in.append(cap_store[node, k])
            labels_in.append(f"storage_full[{node},{k}]")
    A_in = np.array(rows_in).reshape(len(rows_in), nv)
    prog = ConvexProgram(nv, np.zeros(nv), np.zeros(nv), A_eq, b_eq, A_in, np.array(rhs_in))
    labels_eq = tuple(f"balance[{k}]" for k in range(N))
    return _SftProgram(prog, nodes, labels_eq, tuple(labels_in))


def _witness_matrix(x: np.ndarray, nodes, n: int, N: int) -> np.ndarray:
    Q = np.zeros((n, N))
    ns = len(nodes)
    for j, node in enumerate(nodes):
        Q[node] = x[j::ns][:N]
    return Q


def verify_witness(p: RightsPortfolio, Q, net: InjectionPolytope, fleet: StorageFleet,
                   tol: float = SFT_TOL) -> bool:
    """Independent re-check of a witness against the network and storage models."""
    Q = np.asarray(Q, dtype=float)
    W = p.t - p.s + Q
    f, e = p.f, p.e
    for k in range(p.N):
        if not check_injection_feasible(W[:, k], net.derated(f[:, k]), tol):
            return False
    for i in range(p.n):
        cap = fleet.b[i] - e[i]
        if not check_storage_feasible(Q[i], cap, tol):
            return False
    return True


def _binding(sp: _SftProgram, x: np.ndarray, tol: float) -> list[str]:
    slack = sp.prog.b_in - sp.prog.A_in @ x
    return [sp.labels_in[r] for r in np.flatnonzero(np.abs(slack) <= max(tol, 1e-9))]


def _min_l1_witness(sp: _SftProgram, tol: float) -> np.ndarray | None:
    """Smallest-norm witness: min 1'a with -a <= q <= a over the feasible set."""
    base = sp.prog
    nv = base.n
    I = np.eye(nv)
    A_in = np.vstack([
        np.hstack([base.A_in, np.zeros((base.A_in.shape[0], nv))]),
        np.hstack([I, -I]),
        np.hstack([-I, -I]),
    ])
    b_in = np.concatenate([base.b_in, np.zeros(2 * nv)])
    A_eq = np.hstack([base.A_eq, np.zeros((base.A_eq.shape[0], nv))])
    lin = np.concatenate([np.zeros(nv), np.ones(nv)])
    prog = ConvexProgram(2 * nv, np.zeros(2 * nv), lin, A_eq, base.b_eq, A_in, b_in)
    res = solve_convex(prog)
    if res.status is not Status.OPTIMAL:
        return None
    return res.x[:nv]


def sft_check(p: RightsPortfolio, net: InjectionPolytope, fleet: StorageFleet,
              tol: float = SFT_TOL) -> SftVerdict:
    """Decide simultaneous feasibility; return a witness Q or a labelled certificate."""
    _check_dims(p, net, fleet)
    f, e = p.f, p.e
    _check_derating(f, e, net.c, fleet.b, tol)
    sp = _build_sft_program(p, net, fleet)
    n, N = p.n, p.N
    found = find_feasible_point(sp.prog, tol)
    if not found.feasible:
        cert = found.certificate
        labels: dict[str, float] = {}
        if cert is not None:
            scale = max(_inf(cert.eq), _inf(cert.ineq), 1e-300)
            for lab, yk in zip(sp.labels_eq, cert.eq):
                if abs(yk) > 1e-8 * scale:
                    labels[lab] = float(yk)
            for lab, zk in zip(sp.labels_in, cert.ineq):
                if zk > 1e-8 * scale:
                    labels[lab] = float(zk)
        return SftVerdict(False, None, labels, list(labels), found.violation)

    candidates = []
    x1 = _min_l1_witness(sp, tol) if sp.prog.n else None
    if x1 is not None:
        candidates.append(x1)
    candidates.append(found.x)
    for x in candidates:
        Q = _witness_matrix(x, sp.nodes, n, N)
        if verify_witness(p, Q, net, fleet, tol):
            return SftVerdict(True, Q, None, _binding(sp, x, tol), found.violation)
    # phase I accepted the set, but neither point re-verifies at tol
    Q = _witness_matrix(found.x, sp.nodes, n, N)
    return SftVerdict(False, Q, {}, _binding(sp, found.x, tol), found.violation)


def _inf(v) -> float:
    return float(np.abs(np.asarray(v, dtype=float)).max(initial=0.0))


# ---------------------------------------------------------------------------
# maximum rent


@dataclass
class MaxRentResult:
    portfolio: RightsPortfolio
    rent: float
    target: float
    gap: float
    lp_rent: float
    closed_form_rent: float
    used_closed_form: bool

    @property
    def tight(self) -> bool:
        return abs(self.gap) <= TIGHTNESS_TOL * max(1.0, abs(self.target))


def transmission_surplus(sol: EquilibriumSolution) -> float:
    """TCS in injection form, -sum_k lambda(k)'(v(k) + u(k))."""
    return float(-np.sum(sol.Lambda * sol.injections))


def _closed_form(sol: EquilibriumSolution, n_directed: int, transmission_only: bool) -> RightsPortfolio:
    if transmission_only:
        return portfolio_from_vectors(sol.injections, np.zeros((n_directed, sol.N)))
    return portfolio_from_vectors(sol.injections, np.zeros((n_directed, sol.N)), s=sol.U)


def _max_rent_lp(sol: EquilibriumSolution, net: InjectionPolytope, fleet: StorageFleet,
                 transmission_only: bool):
    """Rent-maximising LP at fixed prices.

    Variables per period: t(k) (balanced), f(k) in [0, c]; in combined mode
    also q_j(k) and e_j(k) in [0, b_j] for storage nodes j, with s = q.  Only
    t - s enters the network constraint, so fixing s = q loses no rent.
    """
    n, N = sol.n, sol.N
    H, c, b = net.H.entries, net.c, fleet.b
    r = H.shape[0]
    nodes = [] if transmission_only else list(fleet.nodes)
    ns = len(nodes)
    it = lambda i, k: k * n + i
    i_f = lambda l, k: n * N + k * r + l
    i_q = lambda j, k: (n + r) * N + k * ns + j
    i_e = lambda j, k: (n + r + ns) * N + k * ns + j
    nv = (n + r + 2 * ns) * N
    lin = np.zeros(nv)
    lower = np.full(nv, -np.inf)
    upper = np.full(nv, np.inf)
    A_eq = np.zeros((N, nv))
    A_in = np.zeros((r * N + 2 * ns * N, nv))
    b_in = np.zeros(A_in.shape[0])
    L = cumulative_matrix(N)
    for k in range(N):
        for i in range(n):
            A_eq[k, it(i, k)] = 1.0
            lin[it(i, k)] = sol.Lambda[i, k]
        for l in range(r):
            row = k * r + l
            for i in range(n):
                A_in[row, it(i, k)] = H[l, i]
            A_in[row, i_f(l, k)] = 1.0
            b_in[row] = c[l]
            lin[i_f(l, k)] = -sol.mu[l, k]
            lower[i_f(l, k)], upper[i_f(l, k)] = 0.0, c[l]
        for j, node in enumerate(nodes):
            lin[i_q(j, k)] = -sol.Lambda[node, k]
            lin[i_e(j, k)] = -sol.nu_upper[node, k]
            lower[i_e(j, k)], upper[i_e(j, k)] = 0.0, b[node]
    for j, node in enumerate(nodes):
        qcols = [i_q(j, k) for k in range(N)]
        for k in range(N):
            lo_row = r * N + 2 * N * j + k
            up_row = lo_row + N
            A_in[lo_row, qcols] = -L[k]
            A_in[up_row, qcols] = L[k]
            A_in[up_row, i_e(j, k)] = 1.0
            b_in[up_row] = b[node]
    prog = ConvexProgram(nv, np.zeros(nv), lin, A_eq, np.zeros(N), A_in, b_in, lower, upper)
    res = solve_convex(prog)
    if res.status is not Status.OPTIMAL:
        raise SolverFailure(f"max-rent LP ended with status {res.status.value}")
    x = res.x
    t = x[: n * N].reshape(N, n).T
    f = x[n * N:(n + r) * N].reshape(N, r).T
    s = np.zeros((n, N))
    e = np.zeros((n, N))
    for j, node in enumerate(nodes):
        s[node] = [x[i_q(j, k)] for k in range(N)]
        e[node] = [x[i_e(j, k)] for k in range(N)]
    return -res.objective, t, f, s, e


def max_rent(sol: EquilibriumSolution, net: InjectionPolytope, fleet: StorageFleet,
             transmission_only: bool = False) -> MaxRentResult:
    """Largest rent any simultaneously feasible portfolio can collect at ``sol``'s prices.

    The target is TCS for transmission-only portfolios and MS otherwise.  The
    closed-form portfolio (t = v + u, s = u, f = 0, e = 0) is returned when it
    reaches the LP optimum; otherwise the LP's own optimum is returned.
    """
    if sol.n != net.n or sol.mu.shape[0] != 2 * net.m or fleet.n != net.n:
        raise DimensionMismatch("solution, network and storage fleet disagree on dimensions")
    r = 2 * net.m
    target = transmission_surplus(sol) if transmission_only else merchandising_surplus(sol.Lambda, sol.V)
    lp_value, t, f, s, e = _max_rent_lp(sol, net, fleet, transmission_only)

    cf = _closed_form(sol, r, transmission_only)
    cf_rent = rent(cf, sol).total
    scale = max(1.0, abs(target))
    if cf_rent >= lp_value - TIGHTNESS_TOL * scale:
        port, used = cf, True
    else:
        s_arg = None if transmission_only else s
        e_arg = None if transmission_only else e
        port, used = portfolio_from_vectors(t, f, s_arg, e_arg), False
    value = rent(port, sol).total
    return MaxRentResult(port, value, target, value - target, lp_value, cf_rent, used)


# ---------------------------------------------------------------------------
# revenue adequacy


@dataclass
class AuditRecord:
    rents: RentStatement
    ms: float
    tcs: float
    retained: float
    adequate: bool
    transmission_only: bool
    transmission_bound_ok: bool
    verdict: SftVerdict

    def summary(self) -> dict[str, object]:
        return {
            "phi": self.rents.phi,
            "sigma": self.rents.sigma,
            "rent_total": self.rents.total,
            "ms": self.ms,
            "tcs": self.tcs,
            "retained": self.retained,
            "transmission_only": self.transmission_only,
            "transmission_bound_ok": self.transmission_bound_ok,
            "adequate": self.adequate,
        }


def revenue_adequacy_audit(p: RightsPortfolio, sol: EquilibriumSolution, report: SettlementReport,
                           net: InjectionPolytope, fleet: StorageFleet,
                           tol: float = SFT_TOL) -> AuditRecord:
    """Certify that the spot market funds ``p``'s rents; refuses infeasible portfolios."""
    verdict = sft_check(p, net, fleet, tol)
    if not verdict.feasible:
        raise NotSimultaneouslyFeasible("portfolio fails the simultaneous feasibility test", verdict)
    rs = rent(p, sol)
    slack_ms = tol * max(1.0, abs(report.ms))
    retained = report.ms - rs.total
    adequate = retained >= -slack_ms
    tx_ok = True
    if p.transmission_only:
        tx_ok = rs.phi <= report.tcs + tol * max(1.0, abs(report.tcs))
        adequate = adequate and tx_ok
    return AuditRecord(rs, report.ms, report.tcs, retained, adequate, p.transmission_only, tx_ok, verdict)
