"""Supervised training of h with a PDE-residual regularizer.

The supervised term fits h_theta to the labels' nonlinear part,
E[ || z - w^T (x - x*) - h_theta(x) || ], and the regularizer penalizes
the defining PDE at fresh uniform samples from the domain box,
E[ || (dh/dx) f(x) - lambda h(x) + w^T f_n(x - x*) || ], keeping the
network honest between dataset points.  The directional derivative comes
from automatic differentiation; f, f_n, lambda, and w are reconstructed
from the dataset metadata via the twin registry.
"""

from __future__ import annotations

import dataclasses
import json
import pathlib
from dataclasses import dataclass, field as dc_field
from typing import List, Optional

import numpy as np
import torch

from .data import Dataset, load_dataset
from .model import SineMLP
from .twin import finite_difference_A, rk4_trajectory, twin_field

__all__ = [
    "TrainConfig",
    "TrainReport",
    "TrainedModel",
    "train",
    "load_model",
    "evaluate_model",
    "trajectory_magnitude",
    "pde_residual_terms",
]


@dataclass(frozen=True)
class TrainConfig:
    hidden_layers: int = 3
    width: int = 128
    omega0: float = 5.0
    pde_weight: float = 0.1
    pde_samples: int = 256
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 2000
    seed: int = 0
    val_fraction: float = 0.1


@dataclass
class TrainReport:
    train_losses: List[float]
    val_losses: List[float]
    holdout_relative_error: float
    epochs: int
    config: dict
    artifact_path: Optional[str] = None


class TrainedModel:
    """A fitted network bound to its dataset metadata."""

    def __init__(self, net: SineMLP, meta, cfg: TrainConfig):
        self.net = net
        self.meta = meta
        self.cfg = cfg

    def h(self, points) -> np.ndarray:
        """h_theta at points, as complex values."""
        X = torch.as_tensor(np.atleast_2d(np.asarray(points, dtype=float)),
                            dtype=torch.float64)
        with torch.no_grad():
            out = self.net(X).numpy()
        return out[:, 0] + 1j * out[:, 1]

    def phi(self, points) -> np.ndarray:
        """phi_hat = w^T (x - x*) + h_theta(x)."""
        X = np.atleast_2d(np.asarray(points, dtype=float))
        lin = (X - self.meta.x_star) @ self.meta.w
        return lin + self.h(X)


def _norm_rows(t: torch.Tensor) -> torch.Tensor:
    # Euclidean norm per row with a smooth guard at zero
    return torch.sqrt(torch.sum(t * t, dim=1) + 1e-24)


def supervised_loss(net, X, target) -> torch.Tensor:
    """E[ || z - w^T x - h_theta(x) || ] with targets z - w^T x precomputed."""
    return torch.mean(_norm_rows(target - net(X)))


def pde_residual_terms(net, X, F, lam, w_fn):
    """Complex PDE residual at rows of X.

    X requires grad; F holds f(x) rows; w_fn holds w^T f_n(x - x*) as
    complex values.  Returns an (m, 2) tensor of residual (re, im) parts.
    """
    out = net(X)
    grad_re = torch.autograd.grad(out[:, 0].sum(), X, create_graph=True)[0]
    grad_im = torch.autograd.grad(out[:, 1].sum(), X, create_graph=True)[0]
    dir_re = torch.sum(grad_re * F, dim=1)
    dir_im = torch.sum(grad_im * F, dim=1)
    lam_re, lam_im = float(lam.real), float(lam.imag)
    res_re = dir_re - (lam_re * out[:, 0] - lam_im * out[:, 1]) + w_fn[:, 0]
    res_im = dir_im - (lam_re * out[:, 1] + lam_im * out[:, 0]) + w_fn[:, 1]
    return torch.stack([res_re, res_im], dim=1)


def _linear_part(meta, X: np.ndarray) -> np.ndarray:
    return (X - meta.x_star) @ meta.w


def train(dataset_path, cfg: TrainConfig = TrainConfig(),
          artifact_path=None, log_every: int = 0) -> tuple:
    """Fit h_theta to a dataset file; returns (TrainedModel, TrainReport)."""
    ds = load_dataset(dataset_path)
    assert all(s in ("converged", "truncated") for s in ds.statuses)
    meta = ds.meta
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    f = twin_field(meta)
    A = finite_difference_A(f, meta.x_star)

    n = ds.x.shape[1]
    m = ds.x.shape[0]
    perm = rng.permutation(m)
    n_val = max(1, int(round(cfg.val_fraction * m)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size == 0:
        raise ValueError("dataset too small for the requested split")

    target = ds.phi - _linear_part(meta, ds.x)
    X_train = torch.as_tensor(ds.x[train_idx], dtype=torch.float64)
    T_train = torch.as_tensor(
        np.stack([target[train_idx].real, target[train_idx].imag], axis=1)
    )
    X_val = torch.as_tensor(ds.x[val_idx], dtype=torch.float64)
    T_val = torch.as_tensor(
        np.stack([target[val_idx].real, target[val_idx].imag], axis=1)
    )

    net = SineMLP(n, cfg.width, cfg.hidden_layers, 2, cfg.omega0).double()
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)

    lo, hi = meta.domain_box[:, 0], meta.domain_box[:, 1]
    train_losses, val_losses = [], []
    n_train = X_train.shape[0]

    for epoch in range(cfg.epochs):
        order = torch.as_tensor(rng.permutation(n_train))
        epoch_loss = 0.0
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss = supervised_loss(net, X_train[idx], T_train[idx])
            if cfg.pde_weight > 0:
                fresh = rng.uniform(lo, hi, size=(cfg.pde_samples, n))
                F_np = f(fresh)
                fn = F_np - (fresh - meta.x_star) @ A.T
                w_fn = fn @ meta.w
                Xp = torch.as_tensor(fresh).requires_grad_(True)
                Fp = torch.as_tensor(F_np)
                Wfn = torch.as_tensor(np.stack([w_fn.real, w_fn.imag], axis=1))
                res = pde_residual_terms(net, Xp, Fp, meta.lam, Wfn)
                loss = loss + cfg.pde_weight * torch.mean(_norm_rows(res))
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * idx.shape[0]
        train_losses.append(epoch_loss / n_train)
        with torch.no_grad():
            val_losses.append(float(supervised_loss(net, X_val, T_val)))
        if log_every and (epoch + 1) % log_every == 0:
            print(f"epoch {epoch + 1}: train {train_losses[-1]:.3e} "
                  f"val {val_losses[-1]:.3e}")

    model = TrainedModel(net, meta, cfg)
    pred = model.phi(ds.x[val_idx])
    denom = float(np.linalg.norm(ds.phi[val_idx]))
    rel = float(np.linalg.norm(pred - ds.phi[val_idx])) / max(denom, 1e-300)
    report = TrainReport(
        train_losses=train_losses,
        val_losses=val_losses,
        holdout_relative_error=rel,
        epochs=cfg.epochs,
        config=dataclasses.asdict(cfg),
    )
    if artifact_path is not None:
        _save(model, report, artifact_path)
        report.artifact_path = str(artifact_path)
    return model, report


def _save(model: TrainedModel, report: TrainReport, path):
    path = pathlib.Path(path)
    meta = model.meta
    torch.save(
        {
            "state_dict": model.net.state_dict(),
            "config": dataclasses.asdict(model.cfg),
            "meta": {
                "system": {
                    "name": meta.system_name,
                    "params": meta.system_params,
                    "polynomial": meta.polynomial,
                },
                "equilibrium": [float(v) for v in meta.x_star],
                "lambda": {"re": meta.lam.real, "im": meta.lam.imag},
                "w": [{"re": c.real, "im": c.imag} for c in meta.w],
                "domain_box": [[float(a), float(b)] for a, b in meta.domain_box],
            },
        },
        path,
    )
    with open(str(path) + ".report.json", "w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(report), fh, indent=1)


def load_model(path) -> TrainedModel:
    from .data import DatasetMeta

    blob = torch.load(path, weights_only=False)
    cfg = TrainConfig(**blob["config"])
    md = blob["meta"]
    meta = DatasetMeta(
        system_name=md["system"]["name"],
        system_params=md["system"].get("params", {}),
        polynomial=md["system"].get("polynomial"),
        x_star=np.asarray(md["equilibrium"], dtype=float),
        lam=complex(md["lambda"]["re"], md["lambda"]["im"]),
        w=np.array([complex(c["re"], c["im"]) for c in md["w"]]),
        domain_box=np.asarray(md["domain_box"], dtype=float),
    )
    net = SineMLP(meta.x_star.size, cfg.width, cfg.hidden_layers, 2, cfg.omega0).double()
    net.load_state_dict(blob["state_dict"])
    return TrainedModel(net, meta, cfg)


def evaluate_model(model: TrainedModel, points) -> np.ndarray:
    """phi_hat at the given points (complex)."""
    return model.phi(points)


def trajectory_magnitude(model: TrainedModel, x0, T: float, dt: float = 0.005,
                         csv_path=None):
    """|phi_hat| along the twin-system trajectory from x0; optional CSV dump."""
    f = twin_field(model.meta)
    ts, states = rk4_trajectory(f, x0, T, dt)
    mags = np.abs(model.phi(states))
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("t,abs_phi\n")
            for t, m in zip(ts, mags):
                fh.write(f"{t:.6f},{m:.12g}\n")
    return ts, mags
