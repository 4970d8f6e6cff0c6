"""Experiment runners and CLI: config parsing, CSV determinism, exit codes."""

import os
import subprocess
import sys

import numpy as np
import pytest

import cvfkit as ck
from cvfkit import cli
from cvfkit import experiments as xp
from cvfkit.errors import BadOverlay, ConfigError


def test_config_requires_seed():
    with pytest.raises(ConfigError):
        xp.ExperimentConfig()


def test_config_validation_messages():
    with pytest.raises(ConfigError):
        xp.ExperimentConfig(seed=1, alpha=1.5)
    with pytest.raises(ConfigError):
        xp.ExperimentConfig(seed=1, cov_mode="sometimes")
    with pytest.raises(ConfigError):
        xp.ExperimentConfig(seed=1, methods=("cvf", "nope"))


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        """
        # experiment setup
        seed = 42
        T = 60
        rho = 0.95, -0.5
        methods = cvf normal_quantile
        alpha = 0.05   # five percent
        """
    )
    values = xp.parse_config_file(path)
    cfg = xp.config_from(values)
    assert cfg.seed == 42 and cfg.T == 60
    assert cfg.rho == (0.95, -0.5)
    assert cfg.methods == ("cvf", "normal_quantile")
    assert cfg.alpha == 0.05


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("seed = 1\nwibble = 2\n")
    with pytest.raises(ConfigError):
        xp.parse_config_file(path)


def test_config_hash_ignores_execution_details():
    a = xp.ExperimentConfig(seed=5, out="x", threads=1)
    b = xp.ExperimentConfig(seed=5, out="y", threads=8)
    c = xp.ExperimentConfig(seed=6)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_g_transform_properties():
    assert xp.g_transform(0.0) == 0.0
    assert xp.g_transform(50.0) == pytest.approx(1.0, abs=1e-12)
    z = np.linspace(-8, 8, 33)
    np.testing.assert_allclose(xp.g_transform(-z), -xp.g_transform(z), atol=1e-15)
    assert (np.abs(xp.g_transform(z)) <= 1.0).all()
    # matches the logistic definition 2(F(z) - 1/2)
    np.testing.assert_allclose(
        xp.g_transform(z), 2.0 * (1.0 / (1.0 + np.exp(-z)) - 0.5), atol=1e-12
    )


def _tiny_model(tmp_path, cov_mode="known"):
    grid = ck.Grid(offsets=(-50.0, 0.0, 20.0), T=60)
    cov = ck.Cov2(1.0, 0.95, 1.0)
    model = ck.calibrate(grid, cov, 0.10, 2000, seed=3, cov_mode=cov_mode)
    path = tmp_path / "model.cvf"
    ck.save_cvf_model(model, path)
    return str(path)


def test_size_study_schema_and_determinism(tmp_path):
    model_file = _tiny_model(tmp_path)
    cfg = xp.ExperimentConfig(
        seed=9,
        T=60,
        J=400,
        size_points=4,
        rho=(0.95,),
        methods=("cvf", "normal_quantile", "subsampling"),
        out=str(tmp_path / "a"),
        model_file=model_file,
    )
    (path,) = xp.run_size_study(cfg)
    lines = open(path).read().splitlines()
    assert lines[0].startswith("# cvfkit size config_hash=")
    assert lines[1] == "method,gamma,c,p_hat,std_err,J,seed"
    assert len(lines) == 2 + 3 * 4
    cfg2 = xp.ExperimentConfig(
        seed=9,
        T=60,
        J=400,
        size_points=4,
        rho=(0.95,),
        methods=("cvf", "normal_quantile", "subsampling"),
        out=str(tmp_path / "b"),
        model_file=model_file,
        threads=3,
    )
    (path2,) = xp.run_size_study(cfg2)
    assert open(path).read() == open(path2).read()


def test_power_study_with_overlay(tmp_path):
    model_file = _tiny_model(tmp_path, cov_mode="estimated")
    overlay = tmp_path / "l2.csv"
    overlay.write_text("c,b,power\n0,0,0.1\n0,2,0.4\n")
    cfg = xp.ExperimentConfig(
        seed=12,
        T=60,
        J=300,
        rho=(0.95,),
        power_c=(0.0,),
        b_min=0,
        b_max=2,
        cov_mode="estimated",
        out=str(tmp_path / "p"),
        model_file=model_file,
        external_l2=str(overlay),
    )
    (path,) = xp.run_power_study(cfg)
    body = open(path).read()
    assert "l2," in body
    rows = [ln.split(",") for ln in body.splitlines()[2:]]
    methods = {r[0] for r in rows}
    assert methods == {"cvf", "l2"}


@pytest.mark.parametrize(
    "content",
    [
        "wrong,header\n0,0\n",
        "c,b,power\n0,0,not_a_number\n",
        "c,b,power\n0,0,1.7\n",
        "c,b,power\n0,0\n",
    ],
)
def test_bad_overlay_rejected(tmp_path, content):
    overlay = tmp_path / "bad.csv"
    overlay.write_text(content)
    with pytest.raises(BadOverlay):
        xp._read_overlay(str(overlay), "L2")


def test_surface_outputs_bounded_transform(tmp_path):
    model_file = _tiny_model(tmp_path)
    cfg = xp.ExperimentConfig(
        seed=15,
        T=60,
        rho=(0.95,),
        surface_gammas=(0.2, 1.0, 1.4),
        surface_draws=50,
        out=str(tmp_path / "s"),
        model_file=model_file,
    )
    (path,) = xp.run_cvf_surface(cfg)
    rows = [ln.split(",") for ln in open(path).read().splitlines()[2:]]
    g_ratio = np.array([float(r[4]) for r in rows])
    g_k = np.array([float(r[5]) for r in rows])
    assert (np.abs(g_ratio) <= 1.0).all() and (np.abs(g_k) <= 1.0).all()
    assert len(rows) == 3 * 50


def test_cli_exit_codes(tmp_path):
    # config error: missing seed
    rc = cli.main(["size", "--out", str(tmp_path)])
    assert rc == cli.EXIT_CONFIG
    # config error: bad config file key
    bad = tmp_path / "bad.cfg"
    bad.write_text("seed = 1\nnot_a_key = 2\n")
    assert cli.main(["size", "--config", str(bad)]) == cli.EXIT_CONFIG
    # numerical failure: refinement cannot converge in zero iterations
    rc = cli.main(
        [
            "calibrate",
            "--seed",
            "3",
            "--T",
            "60",
            "--J",
            "1500",
            "--calibration-J",
            "1500",
            "--rho",
            "-0.95",
            "--epsilon",
            "0.0001",
            "--max-iter",
            "0",
            "--n-check",
            "8",
            "--out",
            str(tmp_path / "nc"),
        ]
    )
    assert rc == cli.EXIT_NUMERICAL
    # i/o error: output path cannot be a directory
    rc = cli.main(
        [
            "limits",
            "--seed",
            "3",
            "--limits-gamma",
            "1.0",
            "--limits-T",
            "50",
            "--limits-draws",
            "1200",
            "--limits-steps",
            "1000",
            "--rho",
            "0.0",
            "--out",
            "/dev/null/impossible",
        ]
    )
    assert rc == cli.EXIT_IO


def test_cli_runs_limits_and_is_deterministic(tmp_path):
    args = [
        "limits",
        "--seed",
        "21",
        "--limits-gamma",
        "1.0",
        "--limits-T",
        "50,100",
        "--limits-draws",
        "1500",
        "--limits-steps",
        "1000",
        "--rho",
        "0.0",
    ]
    assert cli.main(args + ["--out", str(tmp_path / "r1")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "r2"), "--threads", "2"]) == 0
    a = (tmp_path / "r1" / "limits.csv").read_bytes()
    b = (tmp_path / "r2" / "limits.csv").read_bytes()
    assert a == b


def test_cli_entry_point_subprocess(tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "cvfkit.cli",
            "limits",
            "--seed",
            "4",
            "--limits-gamma",
            "0.5",
            "--limits-T",
            "50",
            "--limits-draws",
            "1000",
            "--limits-steps",
            "1000",
            "--rho",
            "0.5",
            "--out",
            str(tmp_path),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "limits.csv").exists()


def test_calibrate_writes_model_and_audit(tmp_path):
    cfg = xp.ExperimentConfig(
        seed=33,
        T=60,
        J=1500,
        calibration_J=6000,
        rho=(-0.95,),
        epsilon=0.05,
        n_check=10,
        max_iter=10,
        out=str(tmp_path),
    )
    outputs = xp.run_calibrate(cfg)
    names = {os.path.basename(p) for p in outputs}
    assert "cvf_rho-0.95.cvf" in names
    assert "calibrate_audit_rho-0.95.csv" in names
    model = ck.load_cvf_model(tmp_path / "cvf_rho-0.95.cvf")
    assert model.grid.T == 60
