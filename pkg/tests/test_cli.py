import json

import pytest

from maclaurin_gp.cli import EXIT_INPUT, main


def test_gen_sinc(tmp_path, capsys):
    out = tmp_path / "sinc.csv"
    assert main(["gen-sinc", "--out", str(out), "--seed", "3", "--n-points", "12"]) == 0
    assert len(out.read_text().splitlines()) == 13


def test_run_fit_ref_report(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"method": "maclaurin-localized", "theta": 2.0, "n_test": 30}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "run"), "--seed", "4"]) == 0
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["seeds"] == [4]
    assert main(["report", str(tmp_path / "run")]) == 0
    assert "mean_kl" in capsys.readouterr().out
    assert main(["fit-ref", "--config", str(cfg), "--out", str(tmp_path / "ref")]) == 0
    ref = json.loads((tmp_path / "ref" / "reference.json").read_text())
    assert ref["params"]["lengthscale"] > 0


def test_sweep_cli(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"method": "maclaurin-localized", "theta": 4.0, "n_test": 20}))
    assert main(["sweep", "--config", str(cfg), "--param", "theta", "--values", "4,2",
                 "--out", str(tmp_path / "sw")]) == 0
    assert main(["report", str(tmp_path / "sw")]) == 0
    assert capsys.readouterr().out.count("theta") >= 2


def test_error_object(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"method": "exact", "bogus": 1}))
    assert main(["run", "--config", str(cfg)]) == EXIT_INPUT
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InputError" and "bogus" in err["message"]
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == EXIT_INPUT
