import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from hpsplines import cli

from .conftest import CONFIGS


def run(*args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def small_config(tmp_path, **outputs):
    rng = np.random.default_rng(7)
    targets = [v / np.linalg.norm(v) for v in rng.standard_normal((2, 3)) + [0, 0, 2]]
    data = {"problem": {"group": "so3", "manifold": "sphere2", "initial": [0, 0, 1],
                        "targets": [{"node": 20, "point": list(targets[0])},
                                    {"node": 40, "point": list(targets[1])}],
                        "sigma": 0.2, "h": 0.025, "N": 40},
            "optimizer": {"grad_tol": 1e-7},
            "outputs": {"dir": str(tmp_path / "default"), **outputs}}
    path = tmp_path / "small.json"
    path.write_text(json.dumps(data))
    return path


def test_solve_trivial(tmp_path, capsys):
    assert run("solve", "--config", CONFIGS / "trivial.json", "--out", tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["final_cost"] <= 1e-12 and summary["converged"]
    assert max(summary["per_target_distances"]) <= 1e-12
    rows = read_csv(tmp_path / "path.csv")
    assert len(rows) == 102 and rows[0][0] == "k"
    mom = read_csv(tmp_path / "momentum.csv")
    assert mom[0] == ["k", "mu0_norm", "mu1_norm", "J_norm", "residual_norm", "node"]
    assert "converged True" in capsys.readouterr().out


def test_solve_artifacts_are_deterministic(tmp_path):
    cfg = small_config(tmp_path)
    for sub in ("a", "b"):
        assert run("solve", "--config", cfg, "--out", tmp_path / sub) == 0
    for name in ("path.csv", "momentum.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_respects_output_flags(tmp_path):
    cfg = small_config(tmp_path, path_csv=False, momentum_csv=False)
    assert run("solve", "--config", cfg) == 0
    out = tmp_path / "default"
    assert (out / "summary.json").exists()
    assert not (out / "path.csv").exists() and not (out / "momentum.csv").exists()


def test_solve_reports_non_convergence(tmp_path):
    cfg = small_config(tmp_path)
    data = json.loads(cfg.read_text())
    data["optimizer"] = {"max_iters": 2, "homotopy_stages": 1}
    cfg.write_text(json.dumps(data))
    assert run("solve", "--config", cfg, "--out", tmp_path) == 3
    assert not json.loads((tmp_path / "summary.json").read_text())["converged"]


def test_check_gradient_seed_42(tmp_path, capsys):
    assert run("check-gradient", "--config", CONFIGS / "sphere_spline.json",
               "--out", tmp_path) == 0
    report = json.loads((tmp_path / "gradient_check.json").read_text())
    assert report["seed"] == 42 and report["relative_l2"] <= 1e-5
    assert "relative l2 discrepancy" in capsys.readouterr().out


def test_check_gradient_fd_only_for_cubic(tmp_path, capsys):
    assert run("check-gradient", "--config", CONFIGS / "strand.json", "--out", tmp_path) == 0
    assert "adjoint unavailable; FD only" in capsys.readouterr().out
    report = json.loads((tmp_path / "gradient_check.json").read_text())
    assert report["adjoint_gradient"] is None and len(report["fd_gradient"]) == 12


def test_check_gradient_left_reduction_matches(tmp_path):
    cfg = small_config(tmp_path)
    data = json.loads(cfg.read_text())
    data["problem"]["reduction_side"] = "left"
    cfg.write_text(json.dumps(data))
    assert run("check-gradient", "--config", cfg, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "gradient_check.json").read_text())["relative_l2"] <= 1e-5


def test_check_gradient_bad_eps(tmp_path):
    assert run("check-gradient", "--config", small_config(tmp_path), "--eps", "0") == 2


def test_sweep_sigma(tmp_path):
    cfg = small_config(tmp_path)
    assert run("sweep-sigma", "--config", cfg, "--out", tmp_path, "--sigmas", "0.4,0.2,0.1") == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[0][:3] == ["sigma", "final_cost", "sum_sq_distance"]
    assert [float(r[0]) for r in rows[1:]] == [0.4, 0.2, 0.1]
    sq = [float(r[2]) for r in rows[1:]]
    assert sq[0] >= sq[1] >= sq[2]
    assert json.loads((tmp_path / "sweep.json").read_text())["matching_non_increasing"]


def test_sweep_sigma_errors(tmp_path):
    cfg = small_config(tmp_path)
    assert run("sweep-sigma", "--config", cfg) == 2
    assert run("sweep-sigma", "--config", cfg, "--sigmas", "0.1,0.2") == 2


def test_convergence(tmp_path, capsys):
    assert run("convergence", "--config", CONFIGS / "free_cubic.json", "--out", tmp_path) == 0
    info = json.loads((tmp_path / "convergence.json").read_text())
    assert 0.8 <= info["order"] <= 2.2 and info["monotone"]
    rows = read_csv(tmp_path / "convergence.csv")
    assert rows[0] == ["h", "error"] and len(rows) == 5
    assert "fitted order" in capsys.readouterr().out


def test_convergence_h_list_override(tmp_path):
    assert run("convergence", "--config", CONFIGS / "free_cubic.json", "--out", tmp_path,
               "--h-list", "0.1,0.05") == 0
    assert len(read_csv(tmp_path / "convergence.csv")) == 3


def test_config_errors_exit_2(tmp_path):
    assert run("solve", "--config", tmp_path / "nope.json") == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"problem": {"group": "so3"}}))
    assert run("solve", "--config", bad) == 2


def test_numeric_failure_exit_3(tmp_path):
    cfg = small_config(tmp_path)
    data = json.loads(cfg.read_text())
    data["problem"]["xi0_initial"] = [100.0, 0.0, 0.0]
    cfg.write_text(json.dumps(data))
    assert run("check-gradient", "--config", cfg, "--out", tmp_path) == 3


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("launch")
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hpsplines", "solve", "--config",
                           str(CONFIGS / "trivial.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "summary.json").exists()
