"""CLI: train a model from a dataset file, or replay a trajectory magnitude."""

from __future__ import annotations

import argparse
import json

import numpy as np

from .train import TrainConfig, load_model, train, trajectory_magnitude


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="eigtrainer", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit h_theta to a labeled dataset")
    p.add_argument("dataset", help="dataset CSV path (sidecar found automatically)")
    p.add_argument("--out", required=True, help="model artifact path")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--pde-weight", type=float, default=0.1)
    p.add_argument("--omega0", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=0)

    q = sub.add_parser("trajectory", help="|phi_hat| along a twin trajectory")
    q.add_argument("model", help="model artifact path")
    q.add_argument("--x0", required=True, help="comma-separated initial state")
    q.add_argument("--horizon", type=float, default=20.0)
    q.add_argument("--out", required=True, help="output CSV path")

    args = ap.parse_args(argv)
    if args.command == "train":
        cfg = TrainConfig(
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            pde_weight=args.pde_weight,
            omega0=args.omega0,
            seed=args.seed,
        )
        model, report = train(args.dataset, cfg, artifact_path=args.out,
                              log_every=args.log_every)
        print(json.dumps({
            "holdout_relative_error": report.holdout_relative_error,
            "final_train_loss": report.train_losses[-1],
            "final_val_loss": report.val_losses[-1],
            "artifact": report.artifact_path,
        }, indent=1))
        return 0

    model = load_model(args.model)
    x0 = np.array([float(v) for v in args.x0.split(",")])
    ts, mags = trajectory_magnitude(model, x0, args.horizon, csv_path=args.out)
    print(json.dumps({
        "initial": float(mags[0]),
        "final": float(mags[-1]),
        "ratio": float(mags[-1] / mags[0]) if mags[0] else None,
        "csv": args.out,
    }, indent=1))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
