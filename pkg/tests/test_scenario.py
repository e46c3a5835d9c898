import copy
import json

import numpy as np
import pytest

from srk.corpus import generate_corpus
from srk.dispatch import solve_dispatch
from srk.errors import DisconnectedGraph, InvalidIndex, InvalidReactance, ParseError, ValidationError
from srk.scenario import (
    contract_from_dict, parse_contract, parse_portfolio, parse_scenario, portfolio_from_records,
    scenario_from_dict, scenario_rights, scenario_to_dict,
)


@pytest.fixture
def raw_c(data_dir):
    return json.loads((data_dir / "instance_c.json").read_text())


def test_fixtures_parse(data_dir, instance_b):
    assert (instance_b.n, instance_b.N, instance_b.m) == (2, 1, 1)
    assert instance_b.c.tolist() == [3.0, 3.0]
    assert instance_b.costs[0][0].kind == "quadratic" and instance_b.costs[1][0].kind == "pwl"
    p = parse_portfolio(data_dir / "portfolio_over.json", instance_b)
    assert np.array_equal(p.T[(0, 1)], [4.0])
    c = parse_contract(data_dir / "contract.json", 2)
    assert (c.supplier_node, c.demander_node, c.lambda_c, c.q_c) == (0, 1, 5.0, 6.0)


def test_round_trip():
    for s in generate_corpus(5, 8):
        t = scenario_from_dict(json.loads(json.dumps(scenario_to_dict(s))))
        assert solve_dispatch(t).objective == pytest.approx(solve_dispatch(s).objective, abs=1e-9)
        assert np.array_equal(t.c, s.c) and np.array_equal(t.b, s.b)


def test_decreasing_block_prices_name_node_and_period(raw_c):
    raw_c["costs"][1][0] = {"type": "pwl", "segments": [
        {"price": 9.0, "from": -10.0, "to": -5.0}, {"price": 3.0, "from": -5.0, "to": 0.0}]}
    with pytest.raises(ValidationError, match=r"costs\[1\]\[0\]"):
        scenario_from_dict(raw_c)


def test_negative_capacity(raw_c):
    raw_c["lines"][0]["capacity"] = -1.0
    with pytest.raises(ValidationError, match=r"lines\[0\]"):
        scenario_from_dict(raw_c)


def test_other_validation_errors(raw_c):
    bad = copy.deepcopy(raw_c)
    bad["lines"][0]["reactance"] = 0.0
    with pytest.raises(InvalidReactance):
        scenario_from_dict(bad)
    bad = copy.deepcopy(raw_c)
    bad["n"] = 3
    bad["costs"].append({"type": "quadratic", "a": 0.0, "b": 0.0, "vmin": 0.0, "vmax": 0.0})
    bad["storage"].append(0.0)
    with pytest.raises(DisconnectedGraph):
        scenario_from_dict(bad)
    bad = copy.deepcopy(raw_c)
    bad["lines"][0]["to"] = 3
    with pytest.raises(InvalidIndex):
        scenario_from_dict(bad)
    bad = copy.deepcopy(raw_c)
    bad["storage"] = [0.0, -1.0]
    with pytest.raises(ValidationError, match=r"storage\[1\]"):
        scenario_from_dict(bad)
    bad = copy.deepcopy(raw_c)
    del bad["lines"][0]["capacity"]
    with pytest.raises(ParseError, match=r"lines\[0\]\.capacity: missing"):
        scenario_from_dict(bad)
    bad = copy.deepcopy(raw_c)
    bad["costs"][0] = {"type": "cubic"}
    with pytest.raises(ParseError, match="unknown cost type"):
        scenario_from_dict(bad)
    bad = copy.deepcopy(raw_c)
    bad["costs"][1] = bad["costs"][1][:1]
    with pytest.raises(ValidationError, match="one cost per period"):
        scenario_from_dict(bad)


def test_malformed_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"n": 2,\n "N": }')
    with pytest.raises(ParseError, match="line 2"):
        parse_scenario(f)
    with pytest.raises(ParseError, match="cannot read"):
        parse_scenario(tmp_path / "missing.json")


def test_period_hours_normalisation(raw_c):
    base = solve_dispatch(scenario_from_dict(raw_c))
    two = scenario_from_dict(dict(raw_c, period_hours=2.0, storage=[0.0, 2.0]))
    sol = solve_dispatch(two)
    assert np.allclose(sol.Lambda / 2.0, base.Lambda, atol=1e-6)
    assert np.allclose(sol.U, base.U, atol=1e-6)
    assert two.b[1] == pytest.approx(1.0)


def test_portfolio_records(instance_c, caplog):
    recs = [
        {"type": "FTR", "injection_node": 1, "withdrawal_node": 2, "profile": [1.0, 0.0]},
        {"type": "ftr", "from": 2, "to": 1, "profile": [0.5, 0.5]},
        {"type": "FGR", "line": 2, "profile": [1.0, 1.0]},
        {"type": "FSR", "node": 2, "profile": [-1.0, 2.0]},
        {"type": "ECR", "node": 2, "profile": [0.5, 0.0]},
    ]
    p = portfolio_from_records(recs, instance_c)
    assert set(p.T) == {(0, 1), (1, 0)}
    assert list(p.F) == [1]
    assert "net forward energy position" in caplog.text
    with pytest.raises(InvalidIndex):
        portfolio_from_records([{"type": "FGR", "line": 3, "profile": [1.0, 1.0]}], instance_c)
    with pytest.raises(ValidationError, match="horizon"):
        portfolio_from_records([{"type": "FSR", "node": 1, "profile": [1.0]}], instance_c)
    with pytest.raises(ParseError, match="unknown right"):
        portfolio_from_records([{"type": "PCR", "node": 1, "profile": [1.0, 1.0]}], instance_c)
    with pytest.raises(ValidationError):
        portfolio_from_records([{"type": "FTR", "from": 1, "to": 2, "profile": [-1.0, 1.0]}], instance_c)


def test_embedded_rights_block(raw_c, instance_c):
    assert scenario_rights(raw_c, instance_c) is None
    raw_c["rights"] = [{"type": "FSR", "node": 2, "profile": [-1.0, 1.0]}]
    assert np.array_equal(scenario_rights(raw_c, instance_c).S[1], [-1.0, 1.0])


def test_contract_parsing():
    c = contract_from_dict({"supplier_node": 1, "demander_node": 2, "lambda_c": 5,
                            "profiles": {"q_i": [3, 3], "q_j": [2, 4]}})
    assert c.q_c == 6.0
    with pytest.raises(InvalidIndex):
        contract_from_dict({"supplier_node": 3, "demander_node": 2, "lambda_c": 5, "q_i": [1], "q_j": [1]}, n=2)
    with pytest.raises(ValidationError, match="contract"):
        contract_from_dict({"supplier_node": 1, "demander_node": 2, "lambda_c": 5, "q_i": [1, 1], "q_j": [3, 0]})
