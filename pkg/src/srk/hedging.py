"""Fixed-price bilateral contracts hedged with a CFD, an FTR and an FSR.

A supplier at node i produces q_i and a demander at node j consumes q_j, both
balancing to q_c over the horizon, at a fixed price lambda_c.  The package

    CFD   demander pays supplier lambda_c q_c - lambda_i'q_i
    FTR   i -> j with profile q_i
    FSR   at j with profile q_j - q_i

nets each party to exactly +/- lambda_c q_c for any prices.

Units: prices are $/MWh and profile entries are energy per period (MWh), so
with one-hour periods the profiles read as MW.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import HorizonMismatch, InvalidIndex, ProfileImbalance, ValidationError
from .rights import Fsr, Ftr

BALANCE_TOL = 1e-9
LEDGER_ROWS = ("spot", "CFD", "FTR", "FSR", "total")


@dataclass(frozen=True)
class BilateralContract:
    supplier_node: int
    demander_node: int
    q_i: np.ndarray
    q_j: np.ndarray
    lambda_c: float
    q_c: float | None = None

    def __post_init__(self):
        qi = np.array(self.q_i, dtype=float).ravel()
        qj = np.array(self.q_j, dtype=float).ravel()
        if qi.shape != qj.shape or qi.size == 0:
            raise HorizonMismatch(f"production profile has {qi.size} periods, consumption {qj.size}")
        if not (np.all(np.isfinite(qi)) and np.all(np.isfinite(qj)) and np.isfinite(self.lambda_c)):
            raise ValidationError("contract profiles and price must be finite")
        if np.any(qi < 0) or np.any(qj < 0):
            raise ValidationError("contract profiles must be nonnegative")
        if self.supplier_node < 0 or self.demander_node < 0:
            raise InvalidIndex("contract nodes must be nonnegative")
        si, sj = float(qi.sum()), float(qj.sum())
        if abs(si - sj) > BALANCE_TOL * max(1.0, abs(si)):
            raise ProfileImbalance(f"production totals {si} but consumption totals {sj}")
        q_c = si if self.q_c is None else float(self.q_c)
        if abs(q_c - si) > BALANCE_TOL * max(1.0, abs(si)):
            raise ProfileImbalance(f"contract quantity {q_c} differs from profile total {si}")
        qi.setflags(write=False)
        qj.setflags(write=False)
        object.__setattr__(self, "q_i", qi)
        object.__setattr__(self, "q_j", qj)
        object.__setattr__(self, "lambda_c", float(self.lambda_c))
        object.__setattr__(self, "q_c", q_c)

    @property
    def N(self) -> int:
        return len(self.q_i)

    @property
    def fixed_payment(self) -> float:
        return self.lambda_c * self.q_c


@dataclass(frozen=True)
class HedgePackage:
    contract: BilateralContract
    ftr: Ftr | None  # None when both parties sit at the same node
    fsr: Fsr

    def cfd_payment(self, Lambda) -> float:
        """Amount the demander pays the supplier."""
        Lam = _prices(self.contract, Lambda)
        return self.contract.fixed_payment - float(Lam[self.contract.supplier_node] @ self.contract.q_i)


def synthesize_hedge(c: BilateralContract) -> HedgePackage:
    i, j = c.supplier_node, c.demander_node
    ftr = Ftr(i, j, c.q_i.copy()) if i != j else None
    fsr = Fsr(j, c.q_j - c.q_i)
    return HedgePackage(c, ftr, fsr)


def _prices(c: BilateralContract, Lambda) -> np.ndarray:
    Lam = np.asarray(Lambda, dtype=float)
    if Lam.ndim != 2 or Lam.shape[1] != c.N:
        raise HorizonMismatch(f"prices have shape {Lam.shape}, contract horizon is {c.N}")
    if max(c.supplier_node, c.demander_node) >= Lam.shape[0]:
        raise InvalidIndex(f"contract node outside 0..{Lam.shape[0] - 1}")
    return Lam


@dataclass(frozen=True)
class ExposureDecomposition:
    spot_charge: float
    cfd_charge: float
    fixed: float
    transmission_congestion_charge: float
    storage_congestion_charge: float

    @property
    def residual(self) -> float:
        lhs = self.spot_charge + self.cfd_charge
        rhs = self.fixed + self.transmission_congestion_charge + self.storage_congestion_charge
        return abs(lhs - rhs)


def decompose_exposure(c: BilateralContract, Lambda) -> ExposureDecomposition:
    """Split the demander's spot-plus-CFD bill into fixed and congestion parts."""
    Lam = _prices(c, Lambda)
    li, lj = Lam[c.supplier_node], Lam[c.demander_node]
    return ExposureDecomposition(
        spot_charge=float(lj @ c.q_j),
        cfd_charge=float(c.fixed_payment - li @ c.q_i),
        fixed=c.fixed_payment,
        transmission_congestion_charge=float((lj - li) @ c.q_i),
        storage_congestion_charge=float(lj @ (c.q_j - c.q_i)),
    )


@dataclass(frozen=True)
class HedgeLedger:
    """Signed cash flows per party; positive means the party receives money."""

    supplier: dict[str, float]
    demander: dict[str, float]

    def residuals(self, c: BilateralContract) -> tuple[float, float]:
        return (abs(self.supplier["total"] - c.fixed_payment),
                abs(self.demander["total"] + c.fixed_payment))

    def to_csv(self, digits: int = 9) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["item", "supplier", "demander"])
        for row in LEDGER_ROWS:
            w.writerow([row, f"{self.supplier[row]:.{digits}f}", f"{self.demander[row]:.{digits}f}"])
        return buf.getvalue()


def _same_contract(a: BilateralContract, b: BilateralContract) -> bool:
    return (a.supplier_node, a.demander_node, a.lambda_c, a.q_c) == (b.supplier_node, b.demander_node, b.lambda_c, b.q_c) \
        and np.array_equal(a.q_i, b.q_i) and np.array_equal(a.q_j, b.q_j)


def settle_ledger(pkg: HedgePackage, c: BilateralContract, Lambda) -> HedgeLedger:
    Lam = _prices(c, Lambda)
    if pkg.contract is not c and not _same_contract(pkg.contract, c):
        raise ValidationError("hedge package was synthesized for a different contract")
    if pkg.fsr.profile.shape != (c.N,):
        raise HorizonMismatch("FSR profile does not match the contract horizon")
    i, j = c.supplier_node, c.demander_node
    li, lj = Lam[i], Lam[j]
    spot_in = float(li @ c.q_i)
    cfd = c.fixed_payment - spot_in
    ftr = 0.0 if pkg.ftr is None else float((lj - li) @ pkg.ftr.profile)
    fsr = float(Lam[pkg.fsr.node] @ pkg.fsr.profile)
    supplier = {"spot": spot_in, "CFD": cfd, "FTR": 0.0, "FSR": 0.0}
    demander = {"spot": -float(lj @ c.q_j), "CFD": -cfd, "FTR": ftr, "FSR": fsr}
    supplier["total"] = sum(supplier.values())
    demander["total"] = sum(demander.values())
    return HedgeLedger(supplier, demander)
