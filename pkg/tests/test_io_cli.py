import json
import os
from fractions import Fraction as Q

import numpy as np
import pytest

from carnot import catalog
from carnot import io as cio
from carnot.cli import main


def test_group_roundtrip_bit_exact(tmp_path, h12, g42):
    for g in (h12, g42, catalog.get("free_2_3")):
        text = cio.emit_group(g)
        p = tmp_path / "g.json"
        p.write_text(text)
        g2 = cio.load_group(str(p))
        assert g2.layer_of == g.layer_of
        assert g2.struct == g.struct
        assert cio.emit_group(g2) == text  # canonical: bit-identical re-emission


def test_rationals_roundtrip():
    assert cio.parse_rational("-3/7") == Q(-3, 7)
    assert cio.parse_rational("5") == 5
    assert cio.format_rational(Q(6, 4)) == "3/2"
    v = cio.parse_vector("1,0,1/2", dim=3)
    assert v == (1, 0, Q(1, 2))
    assert cio.format_vector(v) == "1,0,1/2"
    with pytest.raises(ValueError):
        cio.parse_vector("1,2", dim=3)


def test_validate_group_file(tmp_path):
    bad = {"name": "bad", "dim": 3, "step": 2, "layers": [1, 1, 2],
           "basis_names": ["x", "y", "z"],
           "brackets": [{"i": 1, "j": 2, "terms": [{"k": 1, "num": 1, "den": 1}]}]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    report, err = cio.validate_group_file(str(p))
    assert err is None and not report.ok
    assert any(v["kind"] == "grading" for v in report.violations)
    p2 = tmp_path / "broken.json"
    p2.write_text("{not json")
    report2, err2 = cio.validate_group_file(str(p2))
    assert report2 is None and "line 1" in err2


def test_cli_group_and_catalog(capsys):
    assert main(["group", "info", "h1"]) == 0
    out = capsys.readouterr().out
    assert "dim: 3" in out and "stratified: True" in out
    assert main(["catalog", "list"]) == 0
    assert "h12" in capsys.readouterr().out
    assert main(["group", "emit", "--catalog", "h2_1"]) == 0
    emitted = capsys.readouterr().out
    assert json.loads(emitted)["dim"] == 6


def test_cli_algebra(capsys):
    assert main(["algebra", "product", "h1", "1,0,0", "0,1,0"]) == 0
    assert capsys.readouterr().out.strip() == "1,1,1/2"
    assert main(["algebra", "term", "-n", "2", "h1", "1,0,0", "0,1,0"]) == 0
    assert capsys.readouterr().out.strip() == "0,0,1/2"
    assert main(["algebra", "oracle", "h1", "--trials", "25"]) == 0
    assert "OK" in capsys.readouterr().out
    assert main(["algebra", "decompose", "-n", "2", "h1"]) == 0
    out = capsys.readouterr().out
    assert "1 1/2" in out and "2 0" in out


def test_cli_validate_exit_code(tmp_path, capsys):
    bad = {"name": "bad", "dim": 3, "step": 2, "layers": [1, 1, 2],
           "brackets": [{"i": 1, "j": 2, "terms": [{"k": 1, "num": 1, "den": 1}]}],
           "basis_names": ["x", "y", "z"]}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(bad))
    assert main(["group", "validate", str(p)]) == 2
    good = tmp_path / "good.json"
    good.write_text(cio.emit_group(catalog.get("h1")))
    assert main(["group", "validate", str(good)]) == 0


def test_cli_subgroups(tmp_path, capsys):
    mor = {"domain": "h1", "codomain": "r2",
           "matrix": [["1", "0", "0"], ["0", "1", "0"]]}
    p = tmp_path / "mor.json"
    p.write_text(json.dumps(mor))
    assert main(["subgroups", "classify-epi", str(p)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "surjective_not_epi"
    assert out["certificate"]["reason"] == "affine_infeasible"
    sub = tmp_path / "sub.json"
    sub.write_text(json.dumps({"vectors": [["0", "1", "0"], ["0", "0", "1"]]}))
    assert main(["subgroups", "complement", "--group", "h1", str(sub)]) == 0
    out2 = json.loads(capsys.readouterr().out)
    assert out2["verdict"] == "h_epimorphism"
    assert main(["subgroups", "quotient", "--group", "h1", str(sub)]) == 0
    out3 = json.loads(capsys.readouterr().out)
    assert out3["quotient"]["dim"] == 1


def test_cli_subgroups_mono(tmp_path, capsys):
    mor = {"domain": "r1", "codomain": "h1", "matrix": [["1"], ["0"], ["0"]]}
    p = tmp_path / "mono.json"
    p.write_text(json.dumps(mor))
    assert main(["subgroups", "classify-mono", str(p)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "h_monomorphism"
    assert out["witness_basis"]


def test_cli_experiment_lift(tmp_path, capsys):
    cfg = {"group": "h1", "control": {"name": "square"}, "steps": 400}
    p = tmp_path / "square.json"
    p.write_text(json.dumps(cfg))
    assert main(["--output-dir", str(tmp_path), "experiment", "lift", str(p)]) == 0
    summary = json.loads((tmp_path / "square_summary.json").read_text())
    assert abs(summary["endpoint"][2] - 1.0) <= 1e-8
    assert summary["horizontal"]
    # manifest records input hash and outputs
    manifest = json.loads((tmp_path / "square_manifest.json").read_text())
    assert str(p) in manifest["inputs"]
    assert any(o.endswith("square_curve.csv") for o in manifest["outputs"])
    # csv has full-precision numbers
    header = (tmp_path / "square_curve.csv").read_text().splitlines()[0]
    assert header == "t,x1,y1,z"


def test_cli_experiment_estimates(tmp_path, capsys):
    cfg = {"group": "h1", "nu": 1.0, "samples": 300}
    p = tmp_path / "est.json"
    p.write_text(json.dumps(cfg))
    assert main(["--output-dir", str(tmp_path), "experiment",
                 "verify-estimates", str(p)]) == 0
    lines = (tmp_path / "est_constants.csv").read_text().splitlines()
    assert lines[0] == "label,nu,samples,sup"
    assert len(lines) > 5


def test_cli_experiment_determinism(tmp_path, capsys):
    cfg = {"group": "h1", "control": {"name": "circle"}, "steps": 256,
           "t": 0.4, "scales": [1e-1, 1e-2]}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    outs = []
    for _ in range(2):
        assert main(["--output-dir", str(tmp_path), "--seed", "7",
                     "experiment", "pansu", str(p)]) == 0
        capsys.readouterr()
        outs.append((tmp_path / "c_quotient.csv").read_text())
    assert outs[0] == outs[1]


def test_cli_experiment_solver_failure_exit_code(tmp_path, capsys):
    # a one-iteration Newton budget cannot converge: shrink attempts
    # exhaust and the command reports a solver failure
    cfg = {"map": "radial_level", "base_point": [0, 1, 0, 1, 0],
           "radius": 0.3, "counts": [3, 3, 1], "budget": 1,
           "shrink_attempts": 1}
    p = tmp_path / "imp.json"
    p.write_text(json.dumps(cfg))
    assert main(["--output-dir", str(tmp_path), "experiment",
                 "implicit", str(p)]) == 3
