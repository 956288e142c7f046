import json
import pathlib
import subprocess

import numpy as np
import pytest

# datasets are produced through the generator's public CLI: the trainer
# consumes the interchange files only


def _run_koopeig(args):
    proc = subprocess.run(
        ["koopeig", *args], capture_output=True, text=True, timeout=600
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def example2_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "example2.csv"
    _run_koopeig(
        [
            "dataset", "--system", "example2",
            "--param", "lambda1=-1", "--param", "lambda2=3",
            "--eq", "0,0", "--lambda-index", "0",
            "--count", "1200", "--seed", "42",
            "--domain=-0.5:0.5,-0.5:0.5",
            "--out", str(out), "--workers", "2",
            "--config", str(_ex2_cfg(tmp_path_factory)),
        ]
    )
    return out


def _ex2_cfg(tmp_path_factory):
    # this saddle system is conjugate to its linearization: trajectories
    # exit any radius in finite time, so certified labels come from a fixed
    # horizon below the escape time of the sampling box (status truncated,
    # remaining tail <= (5/3) phi1^2 e^{-5T} ~ 4e-3 worst case)
    p = tmp_path_factory.mktemp("cfg") / "ex2.json"
    p.write_text(
        json.dumps(
            {"integrator": {"escape_radius": 1e3, "T_min": 1.0, "T_max": 1.1}}
        )
    )
    return p


@pytest.fixture(scope="session")
def linear_dataset(tmp_path_factory):
    """Perfectly labeled linear system: h is identically zero."""
    cfg = tmp_path_factory.mktemp("cfg") / "linear.json"
    cfg.write_text(
        json.dumps(
            {
                "polynomial": {
                    "dim": 2,
                    "equations": [
                        [{"c": -0.5, "e": [1, 0]}],
                        [{"c": -0.8, "e": [0, 1]}],
                    ],
                },
                "equilibrium_guess": [0.0, 0.0],
            }
        )
    )
    out = tmp_path_factory.mktemp("ds") / "linear.csv"
    _run_koopeig(
        [
            "dataset", "--config", str(cfg), "--lambda-index", "0",
            "--count", "400", "--seed", "5", "--domain=-1:1,-1:1",
            "--out", str(out), "--workers", "1",
        ]
    )
    return out


@pytest.fixture(scope="session")
def twolink_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "twolink.csv"
    _run_koopeig(
        [
            "dataset", "--system", "twolink", "--eq", "0,0,0,0",
            "--lambda-index", "0", "--count", "4000", "--seed", "123",
            "--domain=-0.2618:0.2618,-0.2618:0.2618,-0.2618:0.2618,-0.2618:0.2618",
            "--out", str(out), "--workers", "2",
        ]
    )
    return out
