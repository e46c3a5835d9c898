"""Merchandising surplus and its split into transmission and storage congestion surplus."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dispatch import EquilibriumSolution, ScenarioSpec
from .errors import DimensionMismatch, IdentityViolation
from .network import Line

IDENTITY_TOL = 1e-4


def merchandising_surplus(Lambda, V) -> float:
    """-trace(Lambda' V): what consumers pay minus what suppliers receive."""
    Lambda = np.asarray(Lambda, dtype=float)
    V = np.asarray(V, dtype=float)
    if Lambda.shape != V.shape:
        raise DimensionMismatch(f"prices {Lambda.shape} vs injections {V.shape}")
    return float(-np.sum(Lambda * V))


@dataclass
class FlowDecomposition:
    """p[k, i, j]: flow from node i to node j in period k (antisymmetric)."""

    p: np.ndarray

    def kcl_residual(self, injections: np.ndarray) -> float:
        # injections[i, k] must equal sum_j p[k, i, j]
        return float(np.abs(self.p.sum(axis=2).T - injections).max(initial=0.0))


def flow_decomposition(sol: EquilibriumSolution, H, lines: Sequence[Line]) -> FlowDecomposition:
    H = getattr(H, "entries", H)
    n, N = sol.n, sol.N
    m = len(lines)
    forward = H[:m] @ sol.injections  # m x N
    p = np.zeros((N, n, n))
    for l, ln in enumerate(lines):
        p[:, ln.from_node, ln.to_node] += forward[l]
        p[:, ln.to_node, ln.from_node] -= forward[l]
    return FlowDecomposition(p)


@dataclass
class SettlementReport:
    ms: float
    tcs: float
    scs: float
    tcs_dual_form: float
    scs_dual_form: float
    tcs_injection_form: float
    per_node_payments: np.ndarray
    identity_residuals: dict[str, float] = field(default_factory=dict)

    def summary(self) -> dict[str, float]:
        out = {
            "ms": self.ms,
            "tcs": self.tcs,
            "scs": self.scs,
            "tcs_dual_form": self.tcs_dual_form,
            "scs_dual_form": self.scs_dual_form,
            "tcs_injection_form": self.tcs_injection_form,
        }
        out.update({f"residual_{k}": v for k, v in self.identity_residuals.items()})
        return out


def congestion_surpluses(sol: EquilibriumSolution, flows: FlowDecomposition, c, b,
                         check: bool = True) -> SettlementReport:
    """Primal (flow/injection) and dual (shadow price) forms of TCS and SCS.

    Identity residuals are scaled by max(1, |MS|).  With ``check`` set, any
    residual above 1e-4 raises ``IdentityViolation``.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    Lam = sol.Lambda
    ms = merchandising_surplus(Lam, sol.V)
    # 0.5 * sum_k sum_ij (lambda_j - lambda_i) p_ij
    spread = Lam.T[:, None, :] - Lam.T[:, :, None]  # [k, i, j] = lambda_j - lambda_i
    tcs = float(0.5 * np.sum(spread * flows.p))
    tcs_inj = float(-np.sum(Lam * sol.injections))
    scs = float(np.sum(Lam * sol.U))
    tcs_dual = float(np.sum(sol.mu * c[:, None]))
    scs_dual = float(np.sum(sol.nu_upper * b[:, None]))

    scale = max(1.0, abs(ms))
    residuals = {
        "ms_decomposition": abs(ms - tcs - scs) / scale,
        "tcs_flow_vs_injection": abs(tcs - tcs_inj) / scale,
        "tcs_primal_dual": abs(tcs - tcs_dual) / scale,
        "scs_primal_dual": abs(scs - scs_dual) / scale,
        "kcl": flows.kcl_residual(sol.injections),
    }
    report = SettlementReport(ms, tcs, scs, tcs_dual, scs_dual, tcs_inj, Lam * sol.V, residuals)
    if check:
        bad = {k: v for k, v in residuals.items() if v > IDENTITY_TOL}
        if bad:
            raise IdentityViolation(f"settlement identities violated: {bad}")
    return report


def settle(s: ScenarioSpec, sol: EquilibriumSolution, check: bool = True) -> SettlementReport:
    return congestion_surpluses(sol, flow_decomposition(sol, s.H, s.lines), s.c, s.b, check)
