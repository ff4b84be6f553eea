from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from qcfd.cli import main
from qcfd.config import ConfigError, ExperimentConfig, apply_overrides, load_config, module_seed, parse_override
from qcfd.io import read_csv, write_csv
from qcfd.qpinn import load_net

SMALL = """
[grid]
L = 5
[burgers]
nu = 0.05
dt = 1e-3
t_final = 0.02
"""


def write_config(tmp_path: Path, text: str, name: str = "cfg.toml") -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def metrics(out: Path) -> dict:
    return json.loads((out / "metrics.json").read_text())


# -- io and config units ------------------------------------------------------------


def test_csv_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    cols = (rng.standard_normal(7), rng.standard_normal(7) * 1e-300, np.arange(7))
    write_csv(tmp_path / "a.csv", ("x", "t", "u"), cols)
    header, data = read_csv(tmp_path / "a.csv")
    assert header == ["x", "t", "u"]
    for k in range(3):
        np.testing.assert_array_equal(data[:, k], cols[k])


@pytest.mark.parametrize(
    "text,expected",
    [("burgers.nu=0.1", ("burgers.nu", 0.1)), ("grid.L=6", ("grid.L", 6)), ("tt.chis=[2, 4]", ("tt.chis", [2, 4])),
     ("vqa.mode=hadamard", ("vqa.mode", "hadamard")), ("burgers.allow_unstable=true", ("burgers.allow_unstable", True))],
)
def test_parse_override(text, expected):
    assert parse_override(text) == expected


def test_override_errors():
    with pytest.raises(ConfigError):
        parse_override("novalue")
    with pytest.raises(ConfigError):
        apply_overrides({}, ["a.b.c=1"])


def test_override_beats_file(tmp_path):
    cfg = load_config(write_config(tmp_path, SMALL), "fdm", ["burgers.nu=0.1"])
    assert cfg.data["burgers"]["nu"] == 0.1
    assert cfg.data["grid"]["domain_length"] == 1.0


@pytest.mark.parametrize(
    "raw,message",
    [
        ({"grid": {"L": 5}, "burgers": {"dt": 1e-3, "t_final": 0.1}}, "burgers.nu"),
        ({"grid": {"L": 5}}, "burgers"),
        ({"grid": {"L": 5}, "burgers": {"nu": 0.1, "dt": 1e-3, "t_final": 0.1, "nuu": 1}}, "burgers.nuu"),
        ({"grid": {"L": "five"}, "burgers": {"nu": 0.1, "dt": 1e-3, "t_final": 0.1}}, "grid.L"),
        ({"grid": {"L": 5}, "burgers": {"nu": 0.1, "dt": 1e-3, "t_final": 0.1}, "optimizer": {"method": "lbfgs"}}, "optimizer.method"),
        ({"grid": {"L": 5}, "burgers": {"nu": 0.1, "dt": 1e-3, "t_final": 0.1}, "solver": "tt"}, "solver"),
        ({"grid": {"L": 5}, "burgers": {"nu": 0.1, "dt": 1.0, "t_final": 0.1}}, "stability"),
        ({"grid": {"L": 5}, "burgers": {"nu": 0.1, "dt": 1e-3, "t_final": 0.1}, "extra": {}}, "extra"),
    ],
)
def test_validation_names_the_problem(raw, message):
    with pytest.raises(ConfigError, match=message):
        ExperimentConfig.from_dict(raw, "fdm")


def test_solver_specific_checks():
    base = {"grid": {"L": 5, "boundary": "dirichlet"}, "burgers": {"nu": 0.1, "dt": 1e-4, "t_final": 0.1}}
    with pytest.raises(ConfigError, match="periodic"):
        ExperimentConfig.from_dict(base, "tt")
    with pytest.raises(ConfigError, match="periodic"):
        ExperimentConfig.from_dict(base, "vqa")
    ExperimentConfig.from_dict(base, "qpinn")
    with pytest.raises(ConfigError, match="dirichlet"):
        ExperimentConfig.from_dict({**base, "grid": {"L": 5}}, "qpinn")
    with pytest.raises(ConfigError, match="tt.chis"):
        ExperimentConfig.from_dict({**base, "grid": {"L": 5}, "tt": {"chis": [0]}}, "tt")


def test_seed_splitting():
    base = {"grid": {"L": 5, "boundary": "dirichlet"}, "burgers": {"nu": 0.1, "dt": 1e-4, "t_final": 0.1}}
    default = ExperimentConfig.from_dict(base, "qpinn").seeds()
    assert default == {"global": None, "vqa.seed": 42, "qpinn.init_seed": 42, "qpinn.collocation_seed": 7}
    seeded = ExperimentConfig.from_dict({**base, "seed": 5}, "qpinn").seeds()
    assert seeded["qpinn.init_seed"] == module_seed(5, "qpinn.init_seed") != seeded["qpinn.collocation_seed"]
    assert seeded == ExperimentConfig.from_dict({**base, "seed": 5}, "qpinn").seeds()
    explicit = ExperimentConfig.from_dict({**base, "seed": 5, "qpinn": {"init_seed": 3}}, "qpinn").seeds()
    assert explicit["qpinn.init_seed"] == 3


def test_optimizer_defaults_depend_on_solver():
    base = {"grid": {"L": 3}, "burgers": {"nu": 0.05, "dt": 1e-3, "t_final": 5e-3}}
    assert ExperimentConfig.from_dict(base, "vqa").optimizer().learning_rate == 0.05
    pinn = {"grid": {"L": 5, "boundary": "dirichlet"}, "burgers": base["burgers"]}
    assert ExperimentConfig.from_dict(pinn, "qpinn").optimizer().iterations == 2500


# -- commands -----------------------------------------------------------------------


def test_compare_self_is_zero(tmp_path, capsys):
    write_csv(tmp_path / "a.csv", ("x", "u"), (np.linspace(0, 1, 5), np.sin(np.arange(5))))
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "a.csv"), "--out", str(tmp_path / "cmp")]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["mse"] == 0.0 and result["relative_l2"] == 0.0
    assert metrics(tmp_path / "cmp")["results"]["mse"] == 0.0


def test_compare_rejects_mismatches(tmp_path):
    write_csv(tmp_path / "a.csv", ("x", "u"), (np.linspace(0, 1, 5), np.ones(5)))
    write_csv(tmp_path / "b.csv", ("x", "t", "u"), (np.linspace(0, 1, 5), np.zeros(5), np.ones(5)))
    write_csv(tmp_path / "c.csv", ("x", "u"), (np.linspace(0, 2, 5), np.ones(5)))
    out = ["--out", str(tmp_path / "cmp")]
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), *out]) == 1
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "c.csv"), *out]) == 1
    assert main(["compare", str(tmp_path / "a.csv"), str(tmp_path / "missing.csv"), *out]) == 1


def test_missing_field_exits_one(tmp_path, capsys):
    cfg = write_config(tmp_path, "[grid]\nL = 5\n[burgers]\ndt = 1e-3\nt_final = 0.1\n")
    assert main(["fdm-solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "burgers.nu" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_usage_errors_exit_one(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 1
    assert main(["fdm-solve", "--config", str(tmp_path / "absent.toml")]) == 1
    assert main(["fdm-solve", "--config", write_config(tmp_path, "not = [toml")]) == 1


def test_unwritable_output_exits_one(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["fdm-solve", "--config", write_config(tmp_path, SMALL), "--out", str(blocker / "sub")]) == 1


def test_fdm_solve_outputs(tmp_path):
    out = tmp_path / "fdm"
    assert main(["fdm-solve", "--config", write_config(tmp_path, SMALL), "--out", str(out), "--seed", "3"]) == 0
    header, data = read_csv(out / "solution.csv")
    assert header == ["x", "u"] and data.shape == (32, 2)
    header, traj = read_csv(out / "trajectory.csv")
    assert header == ["x", "t", "u"] and traj[-1, 1] == pytest.approx(0.02)
    m = metrics(out)
    assert m["command"] == "fdm-solve" and m["seeds"]["global"] == 3
    assert m["results"]["energy_non_increasing"]
    assert set(m["versions"]) >= {"qcfd", "numpy", "scipy", "python"}
    assert m["wall_time_seconds"] > 0
    again = tmp_path / "again"
    assert main(["fdm-solve", "--config", write_config(tmp_path, SMALL), "--out", str(again)]) == 0
    assert (again / "solution.csv").read_text() == (out / "solution.csv").read_text()


def test_tt_solve_matches_fdm_through_compare(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert main(["fdm-solve", "--config", cfg, "--out", str(tmp_path / "fdm")]) == 0
    assert main(["tt-solve", "--config", cfg, "--out", str(tmp_path / "tt"), "--override", "tt.svd_cutoff=0.0"]) == 0
    header, diag = read_csv(tmp_path / "tt" / "diagnostics.csv")
    assert header == ["step", "max_bond", "discarded_weight", "seconds"] and len(diag) == 20
    assert (tmp_path / "tt" / "final_state.tt").read_text().startswith("TT L=5")
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "fdm" / "solution.csv"), str(tmp_path / "tt" / "solution.csv"), "--out", str(tmp_path / "c")]) == 0
    assert json.loads(capsys.readouterr().out)["mse"] <= 1e-20
    assert metrics(tmp_path / "tt")["results"]["max_abs_vs_fdm_snapshots"] <= 1e-10


def test_sweep_chi_table(tmp_path):
    out = tmp_path / "sweep"
    cfg = write_config(tmp_path, SMALL + "[tt]\nchis = [8, 1, 2, 4]\n")
    assert main(["sweep-chi", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
    header, table = read_csv(out / "mse_vs_chi.csv")
    assert header == ["chi", "mse", "max_abs", "max_bond", "seconds", "anomaly"]
    np.testing.assert_array_equal(table[:, 0], [1, 2, 4, 8])
    assert np.all(table[:, 3] <= table[:, 0])
    assert table[-1, 1] <= 1e-20
    rows = metrics(out)["results"]["table"]
    assert [r["anomaly"] for r in rows] == [bool(v) for v in table[:, 5]]


def test_vqa_solve_outputs(tmp_path):
    out = tmp_path / "vqa"
    cfg = write_config(tmp_path, "[grid]\nL = 3\n[burgers]\nnu = 0.05\ndt = 1e-3\nt_final = 1e-3\n[vqa]\nlayers = 4\n")
    assert main(["vqa-solve", "--config", cfg, "--out", str(out)]) == 0
    header, hist = read_csv(out / "vqa_history.csv")
    assert header == ["step", "iteration", "cost"]
    assert set(hist[:, 0]) == {0.0, 1.0}
    res = metrics(out)["results"]
    assert res["cost_reduction_per_step"][0] >= 1e3
    assert max(res["relative_l2_per_step"]) <= 5e-2


def test_divergence_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, "[grid]\nL = 3\n[burgers]\nnu = 0.05\ndt = 1e-3\nt_final = 1e-3\n[vqa]\nlayers = 2\n[optimizer]\nmethod = 'gd'\nlearning_rate = 50.0\niterations = 50\n")
    assert main(["vqa-solve", "--config", cfg, "--out", str(tmp_path / "v")]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_blow_up_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, "[grid]\nL = 5\n[burgers]\nnu = 0.05\ndt = 0.05\nt_final = 20.0\nallow_unstable = true\n")
    assert main(["fdm-solve", "--config", cfg, "--out", str(tmp_path / "f")]) == 2
    assert "step" in capsys.readouterr().err


def test_qpinn_train_outputs(tmp_path):
    out = tmp_path / "pinn"
    cfg = write_config(
        tmp_path,
        "[grid]\nL = 5\nboundary = 'dirichlet'\n[burgers]\nnu = 0.05\ndt = 1e-4\nt_final = 0.05\n"
        "[qpinn]\nwidth = 4\nhidden = 2\nn_interior = 30\nn_boundary = 6\nn_initial = 6\neval_times = 3\n"
        "[optimizer]\niterations = 3\n",
    )
    assert main(["qpinn-train", "--config", cfg, "--out", str(out)]) == 0
    header, hist = read_csv(out / "training.csv")
    assert header == ["epoch", "total", "residual", "bc", "ic"] and len(hist) == 4
    assert read_csv(out / "classical_training.csv")[1].shape == (4, 5)
    header, pred = read_csv(out / "prediction.csv")
    assert header == ["x", "t", "u"] and pred.shape == (3 * 32, 3)
    assert read_csv(out / "solution.csv")[0] == ["x", "u"]
    assert load_net(out / "net.txt").n_params == 4 * 2 + 4 + 5 * 4 + 5 + 15 + 4 * 5 + 4 + 5
    res = metrics(out)["results"]
    assert "finite differences" in res["input_derivatives"]
    assert res["precision_ratio_classical_over_hybrid"] == pytest.approx(
        res["classical"]["relative_l2_vs_fdm"] / res["relative_l2_vs_fdm"]
    )
