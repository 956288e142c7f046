import json

import numpy as np
import pytest

from eigtrainer import data, twin
from eigtrainer.data import FormatError, MetaMismatch, load_dataset


def test_load_example2(example2_dataset):
    ds = load_dataset(example2_dataset)
    assert ds.meta.system_name == "example2"
    assert ds.meta.lam == 3 + 0j
    assert ds.x.shape[1] == 2
    assert ds.x.shape[0] + ds.n_dropped == 1200
    assert all(s in ("converged", "truncated") for s in ds.statuses)
    # labels match the analytic eigenfunction of this benchmark
    x1, x2 = ds.x[:, 0], ds.x[:, 1]
    ref = -(x1**2) + x2 + 2 * x1 * x2**2 - x2**4
    assert np.linalg.norm(ds.phi.real - ref) / np.linalg.norm(ref) < 1e-2


def test_filter_escaped_records(tmp_path, example2_dataset):
    src = str(example2_dataset)
    lines = open(src).read().splitlines()
    cells = lines[1].split(",")
    cells[6] = "escaped"
    doctored = "\n".join([lines[0], ",".join(cells)] + lines[2:]) + "\n"
    p = tmp_path / "doctored.csv"
    p.write_text(doctored)
    meta = json.loads(open(src + ".meta.json").read())
    (tmp_path / "doctored.csv.meta.json").write_text(json.dumps(meta))
    ds = load_dataset(p)
    assert ds.n_dropped >= 1
    assert all(s in ("converged", "truncated") for s in ds.statuses)


def test_missing_sidecar(tmp_path):
    p = tmp_path / "nope.csv"
    p.write_text("x1,phi_re,phi_im,h_re,h_im,status,T_used\n")
    with pytest.raises(FormatError):
        load_dataset(p)


def test_format_version_gate(tmp_path, example2_dataset):
    src = str(example2_dataset)
    p = tmp_path / "v99.csv"
    p.write_text(open(src).read())
    meta = json.loads(open(src + ".meta.json").read())
    meta["format_version"] = "99"
    (tmp_path / "v99.csv.meta.json").write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        load_dataset(p)


def test_meta_mismatch(tmp_path, example2_dataset):
    src = str(example2_dataset)
    p = tmp_path / "nolam.csv"
    p.write_text(open(src).read())
    meta = json.loads(open(src + ".meta.json").read())
    del meta["lambda"]
    (tmp_path / "nolam.csv.meta.json").write_text(json.dumps(meta))
    with pytest.raises(MetaMismatch):
        load_dataset(p)


def test_unknown_system_twin(example2_dataset):
    ds = load_dataset(example2_dataset)
    bad = data.DatasetMeta(
        system_name="lorenz", system_params={}, polynomial=None,
        x_star=ds.meta.x_star, lam=ds.meta.lam, w=ds.meta.w,
        domain_box=ds.meta.domain_box,
    )
    with pytest.raises(twin.UnknownSystem):
        twin.twin_field(bad)


def test_twin_satisfies_analytic_pde(example2_dataset):
    """Strong twin check: the known analytic h solves the PDE under the twin f."""
    ds = load_dataset(example2_dataset)
    f = twin.twin_field(ds.meta)
    A = twin.finite_difference_A(f, ds.meta.x_star)
    assert np.allclose(A, np.diag([-1.0, 3.0]), atol=1e-6)
    rng = np.random.default_rng(0)
    X = rng.uniform(-0.5, 0.5, (50, 2))
    h = lambda x: -((x[:, 0] - x[:, 1] ** 2) ** 2)
    eps = 1e-6
    dh1 = (h(X + [eps, 0]) - h(X - [eps, 0])) / (2 * eps)
    dh2 = (h(X + [0, eps]) - h(X - [0, eps])) / (2 * eps)
    F = f(X)
    fn = F - (X - ds.meta.x_star) @ A.T
    residual = dh1 * F[:, 0] + dh2 * F[:, 1] - ds.meta.lam.real * h(X) + fn @ ds.meta.w.real
    assert np.max(np.abs(residual)) < 1e-5


def test_twin_polynomial_passthrough(linear_dataset):
    ds = load_dataset(linear_dataset)
    assert ds.meta.polynomial is not None
    f = twin.twin_field(ds.meta)
    x = np.array([0.4, -0.2])
    assert np.allclose(f(x), [-0.2, 0.16], atol=1e-12)


def test_rk4_linear_decay():
    f = lambda x: -x
    ts, xs = twin.rk4_trajectory(f, np.array([1.0]), 1.0, dt=0.01)
    assert xs[-1, 0] == pytest.approx(np.exp(-1.0), abs=1e-8)
    assert ts[0] == 0.0 and ts[-1] >= 1.0
