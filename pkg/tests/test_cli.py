import json
import math
import os
import subprocess
import sys

import pytest

from hypgraph import cli, io


def run(argv, capsys):
    code = cli.main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_check_square(capsys):
    code, out = run(["check", "--builtin", "square"], capsys)
    assert code == 0
    assert out["status"] == "ok"
    assert out["result"]["js"]["verdict"] == "pass"


def test_modulus_round_annulus(capsys):
    code, out = run(["modulus", "--round-annulus", "e2pi"], capsys)
    assert code == 0
    assert out["result"]["c"] == pytest.approx(math.exp(2 * math.pi))
    assert out["result"]["modulus"] == pytest.approx(1.0, rel=0.01)


def test_divergence_on_degenerate_extension(capsys):
    code, out = run(["divergence", "--builtin", "d0", "--n", "1,2,4,8", "--h", "0.2"], capsys)
    assert code == 0
    lines = out["result"]["divergence"]["lines"]
    assert sorted(l["vertices"] for l in lines) == [[1, 4], [4, 7]]
    assert out["result"]["graph"]["acyclic"]


@pytest.mark.parametrize("argv", [
    ["check", "--builtin", "nonsense"],
    ["solve", "--builtin", "square", "--h", "0"],
    ["solve", "--builtin", "square", "--n", "-1"],
    ["extend", "--builtin", "example53", "--t", "2"],
    ["modulus", "--round-annulus", "0.5"],
    ["render", "--from", "/nonexistent/dir"],
    ["check", "--domain", "/nonexistent/file.txt"],
])
def test_invalid_input_exit_two(argv, capsys):
    code, out = run(argv, capsys)
    assert code == 2
    assert out["status"] == "error"
    assert out["exit_code"] == 2
    assert out["error"]["type"]


def test_unknown_flag_exit_two(capsys):
    assert cli.main(["check", "--bogus"]) == 2


def test_exit_code_mapping():
    from hypgraph.limits import AmbiguousFit, StepRejected
    from hypgraph.solver import SolverError
    assert cli.exit_code_for(AmbiguousFit("x")) == 4
    assert cli.exit_code_for(StepRejected("x")) == 3
    assert cli.exit_code_for(SolverError("x")) == 3
    assert cli.exit_code_for(ValueError("x")) == 2


def test_solve_artifacts_are_byte_stable(tmp_path, capsys):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code, _ = run(["solve", "--builtin", "square", "--n", "2", "--h", "0.2", "--seed", "7",
                       "--out", str(d)], capsys)
        assert code == 0
        outs.append(d)
    for name in ("summary.json", "solution.csv", "mesh.txt", "domain.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert (outs[0] / "solution.svg").exists()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "scenario.txt"
    cfg.write_text("builtin = square\nn = 1, 2\nh = 0.25   # coarse\n")
    code, out = run(["sequence", "--config", str(cfg), "--h", "0.2"], capsys)
    assert code == 0
    assert out["result"]["n_list"] == [1.0, 2.0]
    assert len(out["result"]["solves"]) == 2


def test_config_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("colour = blue\n")
    code, out = run(["check", "--config", str(cfg)], capsys)
    assert code == 2


def test_domain_file_round_trip(tmp_path, capsys):
    from hypgraph.domain import builtin_domain
    f = tmp_path / "example.txt"
    f.write_text(io.domain_to_text(builtin_domain("example53")))
    code, out = run(["check", "--domain", str(f)], capsys)
    assert code == 0
    assert out["domain"]["vertices"] == 8


def test_render_regenerates_figures(tmp_path, capsys):
    d = tmp_path / "solve"
    run(["solve", "--builtin", "square", "--n", "1", "--h", "0.25", "--out", str(d)], capsys)
    (d / "solution.svg").unlink()
    code, out = run(["render", "--from", str(d)], capsys)
    assert code == 0
    assert "solution.svg" in out["result"]["rendered"]
    assert (d / "solution.svg").exists()


def test_parabolicity_model_metrics(tmp_path, capsys):
    code, out = run(["parabolicity", "--metric", "funnel", "--length", "6", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert out["result"]["huber"]["verdict"] == "criterion_not_met"
    assert (tmp_path / "growth.csv").exists()
    code, out = run(["parabolicity", "--metric", "flat", "--length", "12", "--circumference", "3"], capsys)
    assert out["result"]["huber"]["verdict"] == "parabolic_criterion_met"


def test_thread_cap_validated():
    env = dict(os.environ, HYPGRAPH_THREADS="zero")
    p = subprocess.run([sys.executable, "-m", "hypgraph.cli", "modulus"], env=env,
                       capture_output=True, text=True)
    assert p.returncode == 2
    assert json.loads(p.stdout)["status"] == "error"
