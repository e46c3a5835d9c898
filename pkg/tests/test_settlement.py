import dataclasses

import numpy as np
import pytest

from srk.corpus import generate_corpus
from srk.costs import CostSchedule, QuadraticCost, linear_benefit
from srk.dispatch import ScenarioSpec, solve_dispatch
from srk.errors import IdentityViolation
from srk.network import Line
from srk.settlement import congestion_surpluses, flow_decomposition, merchandising_surplus, settle
from srk.storage import StorageFleet


def test_merchandising_surplus_examples(sol_a, sol_b, sol_c):
    assert merchandising_surplus(sol_a.Lambda, sol_a.V) == pytest.approx(0.0, abs=1e-6)
    assert merchandising_surplus(sol_b.Lambda, sol_b.V) == pytest.approx(12.0, abs=1e-6)
    assert merchandising_surplus(sol_c.Lambda, sol_c.V) == pytest.approx(8.0, abs=1e-6)
    assert merchandising_surplus([[6.0], [10.0]], [[3.0], [-3.0]]) == 12.0


def test_flow_examples(instance_b, sol_b, instance_c, sol_c):
    pb = flow_decomposition(sol_b, instance_b.H, instance_b.lines).p
    assert pb[0, 0, 1] == pytest.approx(3.0, abs=1e-6) and pb[0, 1, 0] == pytest.approx(-3.0, abs=1e-6)
    pc = flow_decomposition(sol_c, instance_c.H, instance_c.lines).p
    assert pc[0, 0, 1] == pytest.approx(1.0, abs=1e-6)
    zero = dataclasses.replace(sol_b, V=np.zeros((2, 1)), U=np.zeros((2, 1)))
    assert np.all(flow_decomposition(zero, instance_b.H, instance_b.lines).p == 0)


def test_surplus_examples(instance_a, sol_a, instance_b, sol_b, instance_c, sol_c):
    ra = settle(instance_a, sol_a)
    assert (ra.ms, ra.tcs, ra.scs) == pytest.approx((0.0, 0.0, 0.0), abs=1e-6)
    rb = settle(instance_b, sol_b)
    assert (rb.ms, rb.tcs, rb.scs) == pytest.approx((12.0, 12.0, 0.0), abs=1e-6)
    assert rb.tcs_dual_form == pytest.approx(12.0, abs=1e-6)
    rc = settle(instance_c, sol_c)
    assert (rc.ms, rc.tcs, rc.scs) == pytest.approx((8.0, 0.0, 8.0), abs=1e-6)
    assert rc.scs_dual_form == pytest.approx(8.0, abs=1e-6)
    assert np.allclose(rc.per_node_payments, sol_c.Lambda * sol_c.V)


def test_parallel_lines_are_summed():
    lines = [Line(0, 1, 1.0, 1.0), Line(0, 1, 2.0, 1.0)]
    costs = CostSchedule([[QuadraticCost(1.0, 0.0, 0.0, 10.0)], [linear_benefit(10.0, 6.0)]])
    s = ScenarioSpec(lines, costs, StorageFleet.none(2))
    sol = solve_dispatch(s)
    rep = settle(s, sol)
    p = flow_decomposition(sol, s.H, s.lines).p
    assert p[0, 0, 1] == pytest.approx(sol.V[0, 0], abs=1e-6)
    # the stiffer line carries two thirds and binds first at 1 MW
    assert sol.V[0, 0] == pytest.approx(1.5, abs=1e-6)
    assert rep.tcs == pytest.approx(rep.tcs_dual_form, abs=1e-6)


def test_tampered_duals_raise(instance_b, sol_b):
    bad = dataclasses.replace(sol_b, mu=sol_b.mu * 2)
    with pytest.raises(IdentityViolation):
        settle(instance_b, bad)
    rep = settle(instance_b, bad, check=False)
    assert rep.identity_residuals["tcs_primal_dual"] > 1e-4


def test_corpus_identities_sample():
    for s in generate_corpus(11, 25):
        sol = solve_dispatch(s)
        rep = settle(s, sol)
        tol = 1e-6 * max(1.0, abs(rep.ms))
        assert abs(rep.ms - rep.tcs - rep.scs) <= tol
        assert abs(rep.tcs - rep.tcs_dual_form) <= tol
        assert abs(rep.scs - rep.scs_dual_form) <= tol
        assert abs(rep.tcs - rep.tcs_injection_form) <= tol
        assert min(rep.ms, rep.tcs, rep.scs) >= -1e-8
        assert rep.identity_residuals["kcl"] <= 1e-8
