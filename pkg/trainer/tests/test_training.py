import dataclasses

import numpy as np
import pytest
import torch

from eigtrainer import load_dataset
from eigtrainer.model import SineMLP
from eigtrainer.train import (
    TrainConfig,
    load_model,
    pde_residual_terms,
    train,
)
from eigtrainer.twin import finite_difference_A, twin_field


def test_zero_init_outputs_zero():
    net = SineMLP(2).double()
    X = torch.randn(17, 2, dtype=torch.float64)
    assert torch.all(net(X) == 0.0)


def test_zero_stays_zero_on_perfect_linear_labels(linear_dataset):
    # h == 0 for a linear system: the supervised loss is minimized at the
    # zero-initialized network and training must not drift away
    cfg = TrainConfig(epochs=50, batch_size=128, pde_weight=0.0, seed=1)
    model, report = train(linear_dataset, cfg)
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, (64, 2))
    assert np.max(np.abs(model.h(X))) <= 1e-3


def test_pde_autodiff_matches_finite_differences(example2_dataset):
    ds = load_dataset(example2_dataset)
    f = twin_field(ds.meta)
    A = finite_difference_A(f, ds.meta.x_star)
    net = SineMLP(2, width=32, hidden_layers=2).double()
    with torch.no_grad():  # non-zero output for a meaningful check
        net.out.weight.uniform_(-0.5, 0.5)
        net.out.bias.uniform_(-0.1, 0.1)
    rng = np.random.default_rng(3)
    X_np = rng.uniform(-0.4, 0.4, (10, 2))
    F_np = f(X_np)
    fn = F_np - (X_np - ds.meta.x_star) @ A.T
    w_fn = fn @ ds.meta.w
    X = torch.as_tensor(X_np).requires_grad_(True)
    res = pde_residual_terms(
        net, X, torch.as_tensor(F_np), ds.meta.lam,
        torch.as_tensor(np.stack([w_fn.real, w_fn.imag], axis=1)),
    ).detach().numpy()

    # recompute the directional derivative by central differences
    eps = 1e-6
    def h_out(pts):
        with torch.no_grad():
            return net(torch.as_tensor(pts)).numpy()

    dir_fd = np.zeros((10, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = eps
        diff = (h_out(X_np + e) - h_out(X_np - e)) / (2 * eps)
        dir_fd += diff * F_np[:, [k]]
    out = h_out(X_np)
    lam = ds.meta.lam
    res_fd = np.stack(
        [
            dir_fd[:, 0] - (lam.real * out[:, 0] - lam.imag * out[:, 1]) + w_fn.real,
            dir_fd[:, 1] - (lam.real * out[:, 1] + lam.imag * out[:, 0]) + w_fn.imag,
        ],
        axis=1,
    )
    scale = np.max(np.abs(res_fd)) + 1e-12
    assert np.max(np.abs(res - res_fd)) / scale < 1e-4


def test_training_reduces_loss_and_saves(tmp_path, example2_dataset):
    cfg = TrainConfig(epochs=60, batch_size=256, pde_weight=0.1, seed=0)
    artifact = tmp_path / "model.pt"
    model, report = train(example2_dataset, cfg, artifact_path=artifact)
    assert report.train_losses[-1] < report.train_losses[0]
    assert artifact.exists()
    assert (tmp_path / "model.pt.report.json").exists()
    clone = load_model(artifact)
    X = np.array([[0.2, 0.1], [-0.3, 0.4]])
    assert np.allclose(clone.phi(X), model.phi(X))


def test_training_reproducible_with_seed(example2_dataset):
    cfg = TrainConfig(epochs=10, batch_size=256, pde_weight=0.1, seed=7)
    m1, r1 = train(example2_dataset, cfg)
    m2, r2 = train(example2_dataset, cfg)
    assert r1.train_losses == r2.train_losses
    X = np.array([[0.2, 0.1]])
    assert np.array_equal(m1.phi(X), m2.phi(X))


def test_pde_weight_improves_offdata_residual(example2_dataset):
    """The regularizer lowers the PDE residual away from dataset points."""
    ds = load_dataset(example2_dataset)
    f = twin_field(ds.meta)
    A = finite_difference_A(f, ds.meta.x_star)

    def offdata_residual(model):
        rng = np.random.default_rng(11)
        X_np = rng.uniform(-0.5, 0.5, (256, 2))
        F_np = f(X_np)
        fn = F_np - (X_np - ds.meta.x_star) @ A.T
        w_fn = fn @ ds.meta.w
        X = torch.as_tensor(X_np).requires_grad_(True)
        res = pde_residual_terms(
            model.net, X, torch.as_tensor(F_np), ds.meta.lam,
            torch.as_tensor(np.stack([w_fn.real, w_fn.imag], axis=1)),
        ).detach().numpy()
        return float(np.mean(np.linalg.norm(res, axis=1)))

    base = TrainConfig(epochs=150, batch_size=256, seed=0)
    m_reg, _ = train(example2_dataset, dataclasses.replace(base, pde_weight=0.1))
    m_uno, _ = train(example2_dataset, dataclasses.replace(base, pde_weight=0.0))
    assert offdata_residual(m_reg) < offdata_residual(m_uno)


def test_empty_dataset_error(tmp_path, example2_dataset):
    import json

    src = str(example2_dataset)
    p = tmp_path / "empty.csv"
    header = open(src).readline()
    p.write_text(header)
    meta = json.loads(open(src + ".meta.json").read())
    (tmp_path / "empty.csv.meta.json").write_text(json.dumps(meta))
    from eigtrainer.data import FormatError

    with pytest.raises(FormatError):
        train(p, TrainConfig(epochs=1))
