#!/usr/bin/env python3
"""Recompute the analytic benchmark eigenfunctions and dump comparison CSVs.

Writes, into --outdir:
  example1_stable.csv       x, phi_computed, phi_analytic   (alpha = -1)
  example1_antistable.csv   same columns                    (alpha = +1)
  example2_unstable.csv     x1, x2, phi_re, phi_analytic, status, tail
"""

import argparse
import csv
import pathlib

import numpy as np

from koopeig import eigfn, systems
from koopeig.flow import IntegratorConfig


def example1(outdir, alpha):
    sys_ = systems.builtin("example1", {"alpha": alpha})
    eq = systems.refine_equilibrium(sys_, [0.0])
    ef = eigfn.build(sys_, eq, 0)
    xs = np.linspace(-0.9, 0.9, 181)
    b = eigfn.evaluate_batch(ef, xs.reshape(-1, 1))
    ref = xs / np.sqrt(1.0 - xs**2)
    tag = "stable" if alpha < 0 else "antistable"
    path = outdir / f"example1_{tag}.csv"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "phi_computed", "phi_analytic"])
        for x, p, r in zip(xs, b.phi.real, ref):
            wr.writerow([f"{x:.6f}", f"{p:.12g}", f"{r:.12g}"])
    err = np.max(np.abs(b.phi.real - ref) / np.maximum(np.abs(ref), 1e-6))
    print(f"{path}  mode={ef.mode.value}  max rel error {err:.2e}")


def example2(outdir):
    sys_ = systems.builtin("example2", {"lambda1": -1.0, "lambda2": 3.0})
    eq = systems.refine_equilibrium(sys_, [0.0, 0.0])
    ef = eigfn.build(sys_, eq, 0, IntegratorConfig(escape_radius=1e3))
    n = 51
    ax = np.linspace(-0.5, 0.5, n)
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    b = eigfn.evaluate_batch(ef, pts)
    ref = -(pts[:, 0] ** 2) + pts[:, 1] + 2 * pts[:, 0] * pts[:, 1] ** 2 - pts[:, 1] ** 4
    path = outdir / "example2_unstable.csv"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x1", "x2", "phi_re", "phi_analytic", "status", "tail_estimate"])
        for i in range(pts.shape[0]):
            wr.writerow([
                f"{pts[i,0]:.6f}", f"{pts[i,1]:.6f}",
                f"{b.phi[i].real:.12g}", f"{ref[i]:.12g}",
                b.statuses[i].value, f"{b.tail_estimates[i]:.3g}",
            ])
    rms = np.linalg.norm(b.phi.real - ref) / np.linalg.norm(ref)
    print(f"{path}  rel RMS vs analytic {rms:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="out_analytic")
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    example1(outdir, -1.0)
    example1(outdir, 1.0)
    example2(outdir)


if __name__ == "__main__":
    main()
