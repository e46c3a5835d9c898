import csv
import json

import pytest

from srk.cli import RunConfig, main, run
from srk.errors import ParseError, ValidationError


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_dispatch_writes_prices(data_dir, tmp_path, capsys):
    assert main(["dispatch", str(data_dir / "instance_c.json"), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "lambda.csv")
    assert rows[0] == ["node", "period_1", "period_2"]
    assert rows[2] == ["2", "2.000000000", "10.000000000"]
    for name in ("V", "U", "gamma", "mu", "nu_upper", "nu_lower"):
        assert (tmp_path / f"{name}.csv").exists()
    kkt = json.loads((tmp_path / "kkt.json").read_text())
    assert kkt["kkt_passed"] is True
    assert json.loads(capsys.readouterr().out)["objective"] == pytest.approx(-34.0, abs=1e-6)


def test_settle(data_dir, capsys):
    assert main(["settle", str(data_dir / "instance_b.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["ms"] == pytest.approx(12.0, abs=1e-6) and out["tcs"] == pytest.approx(12.0, abs=1e-6)


def test_audit_over_issued_portfolio(data_dir, capsys):
    code = main(["audit", str(data_dir / "instance_b.json"), str(data_dir / "portfolio_over.json")])
    assert code == 1
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "NotSimultaneouslyFeasible"
    assert "line[0,0]" in out["certificate"]


def test_audit_pass_from_embedded_rights(data_dir, tmp_path, capsys):
    raw = json.loads((data_dir / "instance_c.json").read_text())
    raw["rights"] = [{"type": "FSR", "node": 2, "profile": [-1.0, 1.0]}]
    f = tmp_path / "c_rights.json"
    f.write_text(json.dumps(raw))
    assert main(["audit", str(f)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "Pass" and out["retained"] == pytest.approx(0.0, abs=1e-6)


def test_sft_check_codes(data_dir, tmp_path, capsys):
    assert main(["sft-check", str(data_dir / "instance_b.json"), str(data_dir / "portfolio_over.json")]) == 1
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps([{"type": "FTR", "from": 1, "to": 2, "profile": [3.0]}]))
    assert main(["sft-check", str(data_dir / "instance_b.json"), str(ok), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "witness.csv").exists()


def test_max_rent(data_dir, capsys):
    assert main(["max-rent", str(data_dir / "instance_b.json"), "--transmission-only"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rent"] == pytest.approx(12.0, abs=1e-6) and out["tight"]


def test_hedge_ledger(data_dir, tmp_path, capsys):
    code = main(["hedge", str(data_dir / "instance_c.json"), str(data_dir / "contract.json"),
                 "--out", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "ledger.csv")
    assert rows[-1] == ["total", "30.000000000", "-30.000000000"]
    assert "total,30.000000000,-30.000000000" in capsys.readouterr().out
    info = json.loads((tmp_path / "hedge.json").read_text())
    assert info["fsr"] == {"node": 2, "profile": [-1.0, 1.0]}
    assert info["package_simultaneously_feasible"] is True


def test_parse_errors_exit_2(tmp_path, data_dir, monkeypatch, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["dispatch", str(bad)]) == 2
    assert main(["dispatch", str(tmp_path / "missing.json")]) == 2
    monkeypatch.setenv("SRK_TOL", "tight")
    assert main(["dispatch", str(data_dir / "instance_a.json")]) == 2
    monkeypatch.setenv("SRK_TOL", "1e-5")
    assert main(["dispatch", str(data_dir / "instance_a.json")]) == 0


def test_run_config_validation(data_dir):
    with pytest.raises(ValidationError):
        RunConfig("dispatch", [str(data_dir / "instance_a.json")], tol=0.0)
    with pytest.raises(ValidationError):
        RunConfig("optimise")
    with pytest.raises(ParseError):
        RunConfig("dispatch", ["/nonexistent/x.json"])
    assert run(RunConfig("settle", [str(data_dir / "instance_a.json")])) == 0


def test_corpus_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert main(["corpus", "--seed", "3", "--count", "5", "--out", str(a)]) == 0
    assert main(["corpus", "--seed", "3", "--count", "5", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert len(names) == 6 and names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
