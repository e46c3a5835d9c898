import numpy as np
import pytest
from hypothesis import given, strategies as st

from srk.errors import HorizonMismatch, InvalidIndex, ProfileImbalance, ValidationError
from srk.hedging import (
    BilateralContract, decompose_exposure, settle_ledger, synthesize_hedge,
)

PRICES_C = np.array([[2.0, 10.0], [2.0, 10.0]])


def _contract_c():
    return BilateralContract(0, 1, [3.0, 3.0], [2.0, 4.0], 5.0, 6.0)


def test_synthesis_examples():
    pkg = synthesize_hedge(_contract_c())
    assert (pkg.ftr.injection_node, pkg.ftr.withdrawal_node) == (0, 1)
    assert np.array_equal(pkg.ftr.profile, [3.0, 3.0])
    assert pkg.fsr.node == 1 and np.array_equal(pkg.fsr.profile, [-1.0, 1.0])
    flat = synthesize_hedge(BilateralContract(0, 1, [2.0, 2.0], [2.0, 2.0], 1.0))
    assert np.array_equal(flat.fsr.profile, [0.0, 0.0])
    single = synthesize_hedge(BilateralContract(0, 1, [5.0], [5.0], 1.0))
    assert np.array_equal(single.fsr.profile, [0.0]) and np.array_equal(single.ftr.profile, [5.0])


def test_same_node_contract_needs_no_ftr():
    pkg = synthesize_hedge(BilateralContract(1, 1, [1.0, 0.0], [0.0, 1.0], 4.0))
    assert pkg.ftr is None
    led = settle_ledger(pkg, pkg.contract, PRICES_C)
    assert led.residuals(pkg.contract) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_exposure_example():
    d = decompose_exposure(_contract_c(), PRICES_C)
    assert d.transmission_congestion_charge == pytest.approx(0.0)
    assert d.storage_congestion_charge == pytest.approx(8.0)
    assert d.spot_charge == pytest.approx(44.0)
    assert d.cfd_charge == pytest.approx(-6.0)
    assert d.residual <= 1e-12


def test_exposure_degenerate_cases():
    c = BilateralContract(0, 1, [1.0, 2.0], [2.0, 1.0], 7.0)
    d = decompose_exposure(c, np.full((2, 2), 7.0))
    assert d.transmission_congestion_charge == 0 and d.storage_congestion_charge == 0
    assert d.spot_charge + d.cfd_charge == pytest.approx(c.fixed_payment)
    same = BilateralContract(0, 1, [1.0, 2.0], [1.0, 2.0], 7.0)
    assert decompose_exposure(same, PRICES_C).storage_congestion_charge == 0


def test_ledger_example():
    c = _contract_c()
    led = settle_ledger(synthesize_hedge(c), c, PRICES_C)
    assert led.supplier["total"] == pytest.approx(30.0, abs=1e-12)
    assert led.demander["total"] == pytest.approx(-30.0, abs=1e-12)
    assert led.demander["spot"] == pytest.approx(-44.0)
    assert led.demander["CFD"] == pytest.approx(6.0)
    assert led.demander["FSR"] == pytest.approx(8.0)
    lines = led.to_csv().splitlines()
    assert lines[0] == "item,supplier,demander"
    assert lines[-1] == "total,30.000000000,-30.000000000"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["spot", "CFD", "FTR", "FSR", "total"]


def test_contract_validation():
    with pytest.raises(ProfileImbalance):
        BilateralContract(0, 1, [1.0, 1.0], [1.0, 2.0], 5.0)
    with pytest.raises(ProfileImbalance):
        BilateralContract(0, 1, [1.0, 1.0], [1.0, 1.0], 5.0, q_c=3.0)
    with pytest.raises(HorizonMismatch):
        BilateralContract(0, 1, [1.0, 1.0], [2.0], 5.0)
    with pytest.raises(ValidationError):
        BilateralContract(0, 1, [-1.0, 2.0], [0.5, 0.5], 5.0)
    c = _contract_c()
    with pytest.raises(HorizonMismatch):
        decompose_exposure(c, np.ones((2, 3)))
    with pytest.raises(InvalidIndex):
        decompose_exposure(BilateralContract(0, 4, [1.0], [1.0], 1.0), np.ones((2, 1)))
    with pytest.raises(ValidationError):
        other = BilateralContract(0, 1, [1.0, 1.0], [1.0, 1.0], 5.0)
        settle_ledger(synthesize_hedge(other), c, PRICES_C)


@st.composite
def contracts_and_prices(draw):
    N = draw(st.integers(1, 8))
    n = draw(st.integers(1, 5))
    i = draw(st.integers(0, n - 1))
    j = draw(st.integers(0, n - 1))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    qi = rng.uniform(0, 10, N)
    qj = rng.uniform(0, 10, N)
    qj *= qi.sum() / qj.sum()
    Lam = rng.uniform(-50, 150, (n, N))
    return BilateralContract(i, j, qi, qj, float(rng.uniform(0, 100))), Lam


@given(contracts_and_prices())
def test_perfect_hedge_for_any_prices(case):
    c, Lam = case
    pkg = synthesize_hedge(c)
    led = settle_ledger(pkg, c, Lam)
    scale = max(1.0, abs(c.fixed_payment))
    sup, dem = led.residuals(c)
    assert sup <= 1e-9 * scale and dem <= 1e-9 * scale
    d = decompose_exposure(c, Lam)
    assert d.residual <= 1e-9 * max(scale, abs(d.spot_charge))
    assert led.demander["FSR"] == pytest.approx(d.storage_congestion_charge, abs=1e-9 * scale)
    assert abs(pkg.fsr.profile.sum()) <= 1e-9 * max(1.0, c.q_c)
