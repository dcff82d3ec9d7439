import json

import numpy as np
import pytest

from garnier import io
from garnier.cli import build_parser, main

from conftest import QUAD, TRIPLE


def _config(path, u, **extra):
    doc = {"schema": io.JOB_SCHEMA, "directions": np.asarray(u).tolist(), **extra}
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def solution_file(solutions, tmp_path):
    def make(n):
        path = tmp_path / f"solution{n}.json"
        io.write_json(path, io.solution_to_json(solutions(n)))
        return str(path)
    return make


def test_parser_lists_commands():
    p = build_parser()
    for cmd in ("validate", "rh-solve", "deform", "ratios", "solve", "mesh", "verify"):
        args = p.parse_args([cmd, "--config", "c.json"] + (["s.json"] if cmd == "verify" else []))
        assert args.command == cmd
    args = p.parse_args(["mesh", "--config", "c", "--grid", "8", "6", "--rmax", "5", "--seed", "2"])
    assert args.grid == [8, 6] and args.rmax == 5.0 and args.seed == 2


def test_validate_prints_angles(tmp_path, capsys):
    cfg = _config(tmp_path / "c.json", QUAD.u, ratios=[1.0])
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    text = capsys.readouterr().out
    assert "generic: True" in text and "theta_i" in text and "closed:" in text
    doc = json.loads((tmp_path / "o" / "validate.json").read_text())
    assert len(doc["theta"]) == 4


def test_coplanar_pair_from_config(tmp_path, capsys):
    cfg = _config(tmp_path / "c.json", QUAD.u, coplanar_pair=[3, 4])
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    text = capsys.readouterr().out
    assert "det(u1, u3, u4)" in text and "det(u2, u3, u4)" in text


def test_planar_tuple_exits_with_domain_error(tmp_path, capsys):
    cfg = _config(tmp_path / "c.json", [[1, 0, 0], [0, 1, 0], [-1, -1, 0]])
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_config_exits_with_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"directions": [1,2')
    assert main(["validate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_non_positive_flag(tmp_path):
    cfg = _config(tmp_path / "c.json", TRIPLE.u)
    assert main(["validate", "--config", cfg, "--out", str(tmp_path / "o"), "--rmax", "-1"]) == 1


def test_solve_n0_is_deterministic(tmp_path):
    cfg = _config(tmp_path / "c.json", TRIPLE.u, ratios=[], mesh={"grid": [12, 8], "rmax": 10})
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["solve", "--config", cfg, "--out", str(o)]) == 0
    names = sorted(p.name for p in outs[0].iterdir())
    assert {"solution.json", "plateau.json", "mesh.obj", "mesh.ply", "summary.json"} <= set(names)
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["verification"]["pass"]
    assert summary["stages"][-1] == "verify"


def test_solve_n1_matches_ratio(tmp_path):
    cfg = _config(tmp_path / "c.json", QUAD.u, ratios=[1.2], t_init=[-1.0],
                  mesh={"grid": [16, 8], "rmax": 15})
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["ratios"][0] - 1.2) < 1e-4
    assert summary["t"][0] < 0
    assert summary["verification"]["pass"]
    rows = (out / "ratios.csv").read_text().splitlines()
    assert len(rows) == 3


def test_solve_failure_records_stage(tmp_path):
    cfg = _config(tmp_path / "c.json", [[1, 0, 0], [0, 1, 0], [-1, -1, 0]], ratios=[])
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 2
    assert json.loads((out / "failure.json").read_text())["failed_stage"] == "validate"


def test_ratios_and_mesh_from_solution(solution_file, tmp_path, capsys):
    sol = solution_file(1)
    cfg = _config(tmp_path / "c.json", QUAD.u)
    out = tmp_path / "o"
    assert main(["ratios", "--config", cfg, "--system", sol, "--out", str(out)]) == 0
    doc = json.loads((out / "ratios.json").read_text())
    assert doc["ratios"][0] == pytest.approx(0.92805525, abs=1e-7)
    assert main(["mesh", "--config", cfg, "--system", sol, "--out", str(out),
                 "--grid", "10", "6", "--rmax", "8"]) == 0
    assert (out / "mesh.obj").exists() and (out / "mesh.boundary.json").exists()


def test_deform_writes_trace(solution_file, tmp_path):
    cfg = _config(tmp_path / "c.json", QUAD.u, t_final=[-2.0])
    out = tmp_path / "o"
    assert main(["deform", "--config", cfg, "--system", solution_file(1), "--out", str(out)]) == 0
    sys, _ = io.load_system_or_solution(out / "deformed.json")
    assert sys.t_free.real[0] == pytest.approx(-2.0)
    assert (out / "deform_trace.csv").read_text().count("\n") > 2


def test_system_file_without_gauge_is_rejected(solutions, tmp_path):
    path = tmp_path / "s.json"
    io.write_json(path, io.system_to_json(solutions(1).system))
    cfg = _config(tmp_path / "c.json", QUAD.u)
    assert main(["ratios", "--config", cfg, "--system", str(path), "--out", str(tmp_path)]) == 1


def test_verify_passes(solution_file, tmp_path, capsys):
    assert main(["verify", solution_file(0), "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "FAIL" not in text and "PASS monodromy.target" in text


def test_verify_without_loops(solution_file, tmp_path, capsys):
    assert main(["verify", solution_file(1), "--loops", "", "--out", str(tmp_path)]) == 0
    assert "monodromy" not in capsys.readouterr().out
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert "monodromy" not in rep["checks"]


def test_verify_flags_corruption(solution_file, tmp_path, capsys):
    path = solution_file(0)
    doc = json.loads(open(path).read())
    doc["system"]["A"][0][0][0][0] += 1e-3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify", str(bad), "--out", str(tmp_path)]) == 2
    text = capsys.readouterr().out
    assert "FAIL spectrum" in text and "FAIL monodromy.target" in text


def test_verify_rejects_bad_loops(solution_file, tmp_path):
    assert main(["verify", solution_file(0), "--loops", "9", "--out", str(tmp_path)]) == 1
    assert main(["verify", solution_file(0), "--loops", "a", "--out", str(tmp_path)]) == 1
