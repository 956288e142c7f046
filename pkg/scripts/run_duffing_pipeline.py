#!/usr/bin/env python3
"""Duffing oscillator pipeline: saddle field, stable manifold, Lyapunov grid.

Writes, into --outdir:
  saddle_field.csv     eigenfunction of the unstable eigenvalue at the origin
  manifold.json        zero-level polylines (the stable manifold), with and
                       without bisection refinement of the sampled vertices
  lyapunov.csv         V(x) around the stable focus (1, 0)

The converged saddle-field values sit at the tail tolerance with a
basin-dependent sign; what is meaningful about them is the zero crossing,
which localizes the stable manifold to far below the grid spacing.
"""

import argparse
import json
import pathlib

import numpy as np

from koopeig import eigfn, field, flow, lyapunov, systems
from koopeig.field import GridSpec, Sweep
from koopeig.flow import Direction, IntegratorConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="out_duffing")
    ap.add_argument("--grid", type=int, default=61)
    args = ap.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    sys_ = systems.builtin("duffing", {"delta": 0.5})
    eq0 = systems.refine_equilibrium(sys_, [0.0, 0.0])
    cfg = IntegratorConfig(rtol=1e-10, atol=1e-13, tail_tol=1e-9, T_max=60.0)
    ef = eigfn.build(sys_, eq0, 0, cfg)
    print(f"saddle eigenvalue {ef.lam.real:.4f}, mode {ef.mode.value}")

    spec = GridSpec(axes=(Sweep(-2.0, 2.0, args.grid), Sweep(-2.0, 2.0, args.grid)))
    fld = field.eval_grid(ef, spec)
    field.export_field(fld, "csv", outdir / "saddle_field.csv")

    ls = field.zero_level_set(fld, 0.0, "real")
    main_strand = max(ls.polylines, key=len)
    pick = main_strand[np.linspace(0, len(main_strand) - 1, 24, dtype=int)]
    du = 4.0 / (args.grid - 1)
    refined = eigfn.bisect_zero_on_segments(
        ef, pick - [0.55 * du, 0], pick + [0.55 * du, 0]
    )
    ends, _, _ = flow.integrate_to(
        sys_, refined, 20.0, Direction.FORWARD,
        IntegratorConfig(rtol=1e-12, atol=1e-14),
    )
    dist = np.linalg.norm(ends, axis=1)
    print(f"manifold: {len(main_strand)} vertices, {len(refined)} refined; "
          f"forward-20s distance to origin max {np.max(dist):.2e}")
    with open(outdir / "manifold.json", "w") as fh:
        json.dump(
            {
                "polylines": [[[float(a), float(b)] for a, b in p] for p in ls.polylines],
                "refined_vertices": [[float(a), float(b)] for a, b in refined],
                "membership_distance_at_20s": [float(d) for d in dist],
            },
            fh, indent=1,
        )

    # keep the Lyapunov grid inside the focus basin: outside it the path
    # integrals truncate without certification and V is not meaningful
    model = lyapunov.build_model(sys_, [1.0, 0.0])
    vspec = GridSpec(axes=(Sweep(0.5, 1.5, 41), Sweep(-0.5, 0.5, 41)))
    vals = lyapunov.V_batch(model, vspec.nodes())
    vfld = field.ScalarField(
        spec=vspec, values=vals.astype(complex),
        statuses=np.asarray(["converged"] * len(vals), dtype=object),
    )
    field.export_field(vfld, "csv", outdir / "lyapunov.csv")
    print(f"lyapunov grid: V in [{vals.min():.3g}, {vals.max():.3g}]")


if __name__ == "__main__":
    main()
