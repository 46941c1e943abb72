import json
import math

import pytest

from vortexwave.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == 0 and out.out.strip() else None), out.err


def test_constants(capsys):
    code, js, _ = run(capsys, "--param", "s=0.5", "constants")
    assert code == 0
    assert js["c2s"] == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert js["pair_U"] == pytest.approx(-1 / (8 * math.pi), rel=1e-14)


def test_constants_bad_order(capsys):
    code, _, err = run(capsys, "--param", "s=1.5", "constants")
    assert code == 2 and "order" in err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# polygon\ns = 0.5\npreset = \"polygon\"\nk = 3\nrho = 1.2\n")
    code, js, _ = run(capsys, "--config", str(cfg), "equilibria", "verify")
    assert code == 0 and js["residual_inf"] <= 1e-10
    code, js, _ = run(capsys, "--config", str(cfg), "--param", "jitter=0.01", "equilibria", "find")
    assert code == 0 and js["converged"] and js["residual_inf"] < 1e-10


def test_collision_exit_code(capsys):
    code, _, _ = run(capsys, "--param", "s=0.5", "--param", "positions=[[0,0],[0,0]]", "--param", "strengths=[1,1]", "equilibria", "verify")
    assert code == 3


def test_missing_file(capsys):
    code, _, _ = run(capsys, "--config", "/nonexistent.cfg", "constants")
    assert code == 2


def test_profile_invalid_gamma(capsys, tmp_path):
    code, _, _ = run(capsys, "--out", str(tmp_path), "--param", "s=0.5", "--param", "gamma=3.5", "profile")
    assert code == 2


def test_profile_deterministic(capsys, tmp_path):
    args = ["--out", str(tmp_path), "--param", "s=0.5", "--param", "gamma=1.5", "--param", "n_cheb=32", "--param", "n_uniform=201"]
    code, js, _ = run(capsys, *args, "profile")
    assert code == 0
    assert 0.95 <= js["tail_ratio"][0] and js["tail_ratio"][1] <= 1.05
    first = (tmp_path / "profile.txt").read_bytes()
    run(capsys, *args, "profile")
    assert (tmp_path / "profile.txt").read_bytes() == first


def test_ansatz_commands(capsys, tmp_path):
    base = ["--out", str(tmp_path), "--param", "s=0.5", "--param", "gamma=1.5", "--param", "n_cheb=64"]
    code, js, _ = run(capsys, *base, "--param", "kappa=10", "--param", "U_from_d=1.25", "--param", "samples=101", "ansatz", "scan")
    assert code == 0 and 1.8 <= js["slope"] <= 2.2
    assert (tmp_path / "residual_scan.csv").read_text().startswith("epsilon,sup_residual,slope_partial")
    code, js, _ = run(capsys, *base, "--param", "preset=\"isolated\"", "--param", "kappa=10", "--param", "samples=41", "ansatz", "scan")
    assert code == 0 and js["exact"]
    code, js, _ = run(capsys, "--param", "s=0.5", "--param", f"U={-1 / (8 * math.pi)!r}", "ansatz", "bracket")
    assert code == 0 and js["root_d"] == pytest.approx(1.0, rel=1e-12)
    code, js, _ = run(capsys, *base, "--param", "eps=1e-3", "--param", "d=0.9", "--param", f"U={-1 / (8 * math.pi)!r}", "--param", "quad_n=128", "ansatz", "reduced")
    assert code == 0 and js["normalized"][0][0] == pytest.approx(js["bracket"], rel=0.1)
    code, js, _ = run(capsys, *base, "--param", "kappa=10", "--param", "eps_list=[0.1,0.01]", "ansatz", "lambdas")
    assert code == 0 and len(js["rows"]) == 2


def test_simulate_points(capsys, tmp_path):
    code, js, _ = run(
        capsys, "--out", str(tmp_path), "--param", "s=0.5", "--param", "preset=\"polygon\"", "--param", "k=2",
        "--param", "dt=0.05", "--param", "t_end=5", "simulate", "points",
    )
    assert code == 0 and js["rigid_error"] <= 1e-6 and js["drift_H"] <= 1e-8
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,id,kind,x,y,strength"
    assert (tmp_path / "invariants.csv").read_text().startswith("t,H,Px,Py,I")


def test_simulate_empty(capsys, tmp_path):
    code, _, _ = run(capsys, "--out", str(tmp_path), "--param", "s=0.5", "--param", "positions=[]", "--param", "strengths=[]", "simulate", "points")
    assert code == 2
