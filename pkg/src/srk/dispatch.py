"""Multi-period economic dispatch with storage, nodal prices and KKT checks.

Variable layout of the flat program (``DispatchLayout``)::

    x[k*n + i]              v_i(k)     net injection, node i, period k
    x[n*N + k*ns + j]       u_s(k)     extraction of the j-th storage node s

Only nodes with ``b_i > 0`` get storage variables; the others have ``u_i = 0``.
Row layout::

    eq  row k                       1'(v(k) + u(k)) = 0          -> gamma(k) = -y_k
    in  row k*2m + l                H_l (v(k) + u(k)) <= c_l     -> mu_l(k)
    in  row 2mN + 2Nj + k           -(L u_s)_k <= 0              -> nu_lower_s(k)
    in  row 2mN + 2Nj + N + k       (L u_s)_k <= b_s             -> nu_upper_s(k)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .costs import CostSchedule, PiecewiseLinearCost, QuadraticCost, evaluate_cost, subgradient_gap
from .errors import DimensionMismatch, InfeasibleScenario, SolverFailure, ValidationError
from .network import InjectionPolytope, Line, capacity_vector
from .solver import ConvexProgram, PiecewiseTerm, Status, solve_convex
from .storage import StorageFleet, cumulative_matrix, split_storage_duals

KKT_TOL = 1e-6


@dataclass(frozen=True)
class ScenarioSpec:
    lines: tuple[Line, ...]
    costs: CostSchedule
    storage: StorageFleet
    reference_bus: int = 0
    # hours per period; data are held in per-period units (see scenario.py)
    period_hours: float = 1.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if not isinstance(self.costs, CostSchedule):
            object.__setattr__(self, "costs", CostSchedule(self.costs))
        if not isinstance(self.storage, StorageFleet):
            object.__setattr__(self, "storage", StorageFleet(self.storage))
        if self.N < 1:
            raise ValidationError("horizon N must be at least 1")
        if self.storage.n != self.n:
            raise DimensionMismatch(f"storage vector has {self.storage.n} entries for {self.n} nodes")
        if self.period_hours <= 0:
            raise ValidationError("period_hours must be positive")
        self.polytope  # builds H, raising on bad topology

    @property
    def n(self) -> int:
        return self.costs.n

    @property
    def N(self) -> int:
        return self.costs.N

    @property
    def m(self) -> int:
        return len(self.lines)

    @cached_property
    def polytope(self) -> InjectionPolytope:
        return InjectionPolytope.from_lines(self.lines, self.n, self.reference_bus)

    @property
    def H(self) -> np.ndarray:
        return self.polytope.H.entries

    @property
    def c(self) -> np.ndarray:
        return self.polytope.c

    @property
    def b(self) -> np.ndarray:
        return self.storage.b


@dataclass
class KktReport:
    residuals: dict[str, float]
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def __bool__(self):
        return self.passed


@dataclass
class EquilibriumSolution:
    V: np.ndarray
    U: np.ndarray
    Lambda: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    nu_upper: np.ndarray
    nu_lower: np.ndarray
    objective: float
    solver_residual: float = 0.0
    iterations: int = 0
    kkt: KktReport | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def N(self) -> int:
        return self.V.shape[1]

    @property
    def injections(self) -> np.ndarray:
        """v(k) + u(k), the net injection into the network."""
        return self.V + self.U


@dataclass(frozen=True)
class DispatchLayout:
    n: int
    N: int
    m: int
    storage_nodes: tuple[int, ...]

    @property
    def ns(self) -> int:
        return len(self.storage_nodes)

    @property
    def n_vars(self) -> int:
        return (self.n + self.ns) * self.N

    def v(self, i: int, k: int) -> int:
        return k * self.n + i

    def u(self, j: int, k: int) -> int:
        return self.n * self.N + k * self.ns + j

    def line_row(self, l: int, k: int) -> int:
        return k * 2 * self.m + l

    def storage_row(self, j: int, k: int, upper: bool) -> int:
        return 2 * self.m * self.N + 2 * self.N * j + (self.N if upper else 0) + k


def build_dispatch_program(s: ScenarioSpec) -> tuple[ConvexProgram, DispatchLayout]:
    n, N, m = s.n, s.N, s.m
    lay = DispatchLayout(n, N, m, tuple(s.storage.nodes))
    nv = lay.n_vars
    quad = np.zeros(nv)
    lin = np.zeros(nv)
    lower = np.full(nv, -np.inf)
    upper = np.full(nv, np.inf)
    pwl = []
    for i in range(n):
        for k in range(N):
            f = s.costs[i][k]
            j = lay.v(i, k)
            lower[j], upper[j] = f.v_min, f.v_max
            if isinstance(f, QuadraticCost):
                quad[j] = 2.0 * f.a
                lin[j] = f.b
            elif isinstance(f, PiecewiseLinearCost):
                if len(f.segments) == 1:
                    lin[j] = f.segments[0].price
                else:
                    pwl.append(PiecewiseTerm(j, tuple(f.affine_pieces())))

    A_eq = np.zeros((N, nv))
    A_in = np.zeros((2 * m * N + 2 * N * lay.ns, nv))
    b_in = np.zeros(A_in.shape[0])
    H, c = s.H, s.c
    L = cumulative_matrix(N)
    for k in range(N):
        for i in range(n):
            A_eq[k, lay.v(i, k)] = 1.0
        for j, node in enumerate(lay.storage_nodes):
            A_eq[k, lay.u(j, k)] = 1.0
        for l in range(2 * m):
            r = lay.line_row(l, k)
            for i in range(n):
                A_in[r, lay.v(i, k)] = H[l, i]
            for j, node in enumerate(lay.storage_nodes):
                A_in[r, lay.u(j, k)] = H[l, node]
            b_in[r] = c[l]
    for j, node in enumerate(lay.storage_nodes):
        cols = [lay.u(j, k) for k in range(N)]
        for k in range(N):
            lo, up = lay.storage_row(j, k, False), lay.storage_row(j, k, True)
            A_in[lo, cols] = -L[k]
            A_in[up, cols] = L[k]
            b_in[up] = s.b[node]
    prog = ConvexProgram(nv, quad, lin, A_eq, np.zeros(N), A_in, b_in, lower, upper, pwl)
    return prog, lay


def extract_lmps(gamma, mu, H) -> np.ndarray:
    """Column k is gamma(k) * 1 - H' mu(k)."""
    H = getattr(H, "entries", H)
    gamma = np.asarray(gamma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (H.shape[0], len(gamma)):
        raise DimensionMismatch(f"mu has shape {mu.shape}, need ({H.shape[0]}, {len(gamma)})")
    return gamma[None, :] - H.T @ mu


def solve_dispatch(s: ScenarioSpec, tol: float = KKT_TOL) -> EquilibriumSolution:
    prog, lay = build_dispatch_program(s)
    res = solve_convex(prog)
    if res.status is Status.INFEASIBLE:
        raise InfeasibleScenario("dispatch program reported infeasible; every cost domain should contain 0")
    if res.status is not Status.OPTIMAL:
        raise SolverFailure(f"dispatch solve ended with status {res.status.value}")

    n, N, m = s.n, s.N, s.m
    x = res.x
    V = x[: n * N].reshape(N, n).T.copy()
    U = np.zeros((n, N))
    for j, node in enumerate(lay.storage_nodes):
        U[node] = [x[lay.u(j, k)] for k in range(N)]
    gamma = -res.eq_duals.copy()
    mu = res.ineq_duals[: 2 * m * N].reshape(N, 2 * m).T.copy()
    Lambda = extract_lmps(gamma, mu, s.H)
    nu_u = np.zeros((n, N))
    nu_l = np.zeros((n, N))
    for i in range(n):
        if i in lay.storage_nodes:
            j = lay.storage_nodes.index(i)
            nu_l[i] = [res.ineq_duals[lay.storage_row(j, k, False)] for k in range(N)]
            nu_u[i] = [res.ineq_duals[lay.storage_row(j, k, True)] for k in range(N)]
        else:
            nu_u[i], nu_l[i] = split_storage_duals(Lambda[i])
    sol = EquilibriumSolution(
        V, U, Lambda, gamma, mu, nu_u, nu_l,
        objective=s.costs.total(V), solver_residual=res.kkt_residual, iterations=res.iterations,
    )
    sol.kkt = verify_kkt(s, sol, tol)
    if not sol.kkt.passed:
        worst = max(sol.kkt.residuals, key=sol.kkt.residuals.get)
        raise SolverFailure(
            f"dispatch solution fails KKT check: {worst} residual {sol.kkt.residuals[worst]:.3e}"
        )
    return sol


def verify_kkt(s: ScenarioSpec, sol: EquilibriumSolution, tol: float = KKT_TOL) -> KktReport:
    """Residuals of the optimality conditions; passes iff every one is <= tol.

    Cost stationarity is the interval test lambda_i(k) in dC_i(v_i(k), k),
    with kinks and domain endpoints widened by ``tol``.
    """
    n, N = s.n, s.N
    for name, arr, shape in (
        ("V", sol.V, (n, N)), ("U", sol.U, (n, N)), ("Lambda", sol.Lambda, (n, N)),
        ("mu", sol.mu, (2 * s.m, N)), ("nu_upper", sol.nu_upper, (n, N)), ("nu_lower", sol.nu_lower, (n, N)),
    ):
        if np.shape(arr) != shape:
            raise DimensionMismatch(f"{name} has shape {np.shape(arr)}, need {shape}")
    H, c, b = s.H, s.c, s.b
    L = cumulative_matrix(N)
    W = sol.V + sol.U
    soc = sol.U @ L.T  # row i is L u_i

    lmp = np.abs(sol.Lambda - extract_lmps(sol.gamma, sol.mu, H)).max()
    stat_cost = 0.0
    domain = 0.0
    for i in range(n):
        for k in range(N):
            f = s.costs[i][k]
            v = float(sol.V[i, k])
            domain = max(domain, f.v_min - v, v - f.v_max)
            if f.v_min - tol <= v <= f.v_max + tol:
                stat_cost = max(stat_cost, subgradient_gap(f, v, float(sol.Lambda[i, k]), tol))
    stat_storage = np.abs((sol.nu_upper - sol.nu_lower) @ L - sol.Lambda).max()
    flows = H @ W
    residuals = {
        "lmp_definition": float(lmp),
        "stationarity_cost": float(stat_cost),
        "stationarity_storage": float(stat_storage),
        "balance": float(np.abs(W.sum(axis=0)).max()),
        "line_limits": float(np.maximum(flows - c[:, None], 0.0).max(initial=0.0)),
        "storage_limits": float(max(np.maximum(-soc, 0).max(), np.maximum(soc - b[:, None], 0).max())),
        "domain": float(max(domain, 0.0)),
        "dual_sign": float(max(0.0, -sol.mu.min(initial=0.0), -sol.nu_upper.min(), -sol.nu_lower.min())),
        "complementarity_lines": float(np.abs(sol.mu * (flows - c[:, None])).max(initial=0.0)),
        "complementarity_storage_lower": float(np.abs(sol.nu_lower * soc).max()),
        "complementarity_storage_upper": float(np.abs(sol.nu_upper * (b[:, None] - soc)).max()),
    }
    return KktReport(residuals, tol)


def single_period(s: ScenarioSpec, k: int) -> ScenarioSpec:
    """Period ``k`` of ``s`` as a one-period scenario without storage."""
    return ScenarioSpec(
        s.lines, CostSchedule([[row[k]] for row in s.costs]), StorageFleet.none(s.n),
        s.reference_bus, s.period_hours,
    )
