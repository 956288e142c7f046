"""Command-line interface exposing the full pipeline.

Subcommands: analyze, eval, manifold, lyapunov, dataset, verify.  All
accept ``--config file.json`` (validated against CONFIG_SCHEMA before any
computation) with individual flags taking precedence.  Exit codes: 0
success, 1 error, 2 success with unsatisfied spectral-gap conditions.
Logging verbosity comes from the KOOPMAN_LOG environment variable
(error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys as _sys

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import acceptance, datasetio, eigfn, field, lyapunov, spectral, systems
from ._pool import default_workers
from .errors import ConditionViolated, KoopeigError
from .field import Fixed, GridSpec, Sweep
from .flow import IntegratorConfig

log = logging.getLogger("koopeig")

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "system": {"type": "string"},
        "polynomial": {
            "type": "object",
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "equations": {"type": "array"},
            },
            "required": ["dim", "equations"],
        },
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "equilibrium_guess": {"type": "array", "items": {"type": "number"}},
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "number", "exclusiveMinimum": 0}
                for k in (
                    "rtol", "atol", "h_init", "h_max", "T_min", "T_max",
                    "tail_tol", "escape_radius", "convergence_radius",
                )
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"type": "string", "enum": ["csv", "json"]},
            },
        },
    },
}


def _setup_logging():
    level = os.environ.get("KOOPMAN_LOG", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if jsonschema is not None:
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise KoopeigError(f"config file {path}: {exc.message}") from exc
    return doc


def _parse_params(pairs):
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise KoopeigError(f"--param expects k=v, got '{p}'")
        k, v = p.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            raise KoopeigError(f"--param {k}: '{v}' is not a number")
    return out


def _parse_vector(text, what):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise KoopeigError(f"--{what} expects comma-separated numbers, got '{text}'")


def _parse_grid(text, dim, fixed):
    """--grid "min:max:count[,...]" plus --fixed axis=value fills the rest."""
    parts = text.split(",")
    fixed_map = {}
    for f in fixed or []:
        k, v = f.split("=", 1)
        fixed_map[int(k)] = float(v)
    axes = []
    swept_given = 0
    for i in range(dim):
        if i in fixed_map:
            axes.append(Fixed(fixed_map[i]))
            continue
        if swept_given >= len(parts):
            raise KoopeigError(
                f"grid covers {len(parts)} axes but the system has {dim}; "
                "fix remaining axes with --fixed i=value"
            )
        seg = parts[swept_given]
        swept_given += 1
        try:
            lo, hi, cnt = seg.split(":")
            axes.append(Sweep(float(lo), float(hi), int(cnt)))
        except ValueError:
            raise KoopeigError(f"--grid segment '{seg}' is not min:max:count")
    if swept_given < len(parts):
        raise KoopeigError(f"--grid has {len(parts)} segments but only {swept_given} free axes")
    return GridSpec(axes=tuple(axes))


def _build_system(args, cfg_doc):
    name = args.system or cfg_doc.get("system")
    poly = cfg_doc.get("polynomial")
    if name is None and poly is None:
        raise KoopeigError("no system given: use --system or a config file")
    if name is not None and name not in systems.BUILTIN_NAMES and poly is None:
        raise KoopeigError(
            f"unknown system '{name}' (builtins: {', '.join(systems.BUILTIN_NAMES)})"
        )
    if name in systems.BUILTIN_NAMES:
        params = dict(cfg_doc.get("params", {}))
        params.update(_parse_params(getattr(args, "param", None)))
        return systems.builtin(name, params)
    return systems.parse_polynomial(poly)


def _integrator_cfg(args, cfg_doc):
    doc = dict(cfg_doc.get("integrator", {}))
    return IntegratorConfig(**doc)


def _equilibrium(args, cfg_doc, sys):
    guess = None
    if getattr(args, "eq", None):
        guess = _parse_vector(args.eq, "eq")
    elif "equilibrium_guess" in cfg_doc:
        guess = np.asarray(cfg_doc["equilibrium_guess"], dtype=float)
    else:
        guess = np.zeros(sys.dim)
    if guess.shape != (sys.dim,):
        raise KoopeigError(f"equilibrium guess has dimension {guess.size}, system {sys.dim}")
    return systems.refine_equilibrium(sys, guess)


def _c(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _emit(doc, args):
    text = json.dumps(doc, indent=2, sort_keys=True)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    cfg_doc = _load_config(args.config) if args.config else {}
    sys = _build_system(args, cfg_doc)
    eq = _equilibrium(args, cfg_doc, sys)
    dec = systems.decompose_at(sys, eq)
    spec = spectral.eig(dec.A)
    hyper = spectral.hyperbolicity(spec)
    doc = {
        "system": sys.name,
        "params": sys.params,
        "equilibrium": {
            "point": [float(v) for v in eq.point],
            "residual_norm": eq.residual_norm,
        },
        "A": [[float(v) for v in row] for row in dec.A],
        "spectrum": {
            "eigenvalues": [_c(z) for z in spec.eigenvalues],
            "left_vectors": [[_c(z) for z in row] for row in spec.left_vectors],
            "right_vectors": [[_c(z) for z in row] for row in spec.right_vectors.T],
        },
        "hyperbolic": hyper,
    }
    warn = False
    if hyper:
        doc["classification"] = spectral.classify(spec).value
        reports = [spectral.check_condition(spec, z) for z in spec.eigenvalues]
        doc["conditions"] = [
            {
                "eigenvalue": _c(z),
                "mode": r.mode.value,
                "condition_value": r.condition_value,
                "satisfied": r.satisfied,
                "lambda_max": _c(r.lambda_max),
                "boundedness_caveat": r.boundedness_caveat,
            }
            for z, r in zip(spec.eigenvalues, reports)
        ]
        warn = any(not r.satisfied for r in reports)
    _emit(doc, args)
    return 2 if warn else 0


def _built_eigenfunction(args, cfg_doc):
    sys = _build_system(args, cfg_doc)
    eq = _equilibrium(args, cfg_doc, sys)
    icfg = _integrator_cfg(args, cfg_doc)
    return sys, eigfn.build(sys, eq, args.lambda_index, icfg)


def cmd_eval(args) -> int:
    cfg_doc = _load_config(args.config) if args.config else {}
    sys, ef = _built_eigenfunction(args, cfg_doc)
    out = args.out or cfg_doc.get("output", {}).get("path")
    fmt = args.format or cfg_doc.get("output", {}).get("format", "csv")
    if args.point:
        pts = np.vstack([_parse_vector(p, "point") for p in args.point])
        b = eigfn.evaluate_batch(ef, pts)
        doc = {
            "lambda": _c(ef.lam),
            "mode": ef.mode.value,
            "points": [
                {
                    "x": [float(v) for v in pts[i]],
                    "phi": _c(b.phi[i]),
                    "h": _c(b.h[i]),
                    "status": b.statuses[i].value,
                    "T_used": float(b.T_used[i]),
                    "tail_estimate": float(b.tail_estimates[i]),
                }
                for i in range(pts.shape[0])
            ],
        }
        _emit(doc, args)
        return 0
    if not args.grid:
        raise KoopeigError("eval needs --grid or --point")
    spec = _parse_grid(args.grid, sys.dim, args.fixed)
    fld = field.eval_grid(ef, spec, workers=args.workers)
    if not out:
        raise KoopeigError("eval over a grid needs --out")
    field.export_field(fld, fmt, out)
    log.info("wrote %s field to %s", fmt, out)
    return 0


def cmd_manifold(args) -> int:
    cfg_doc = _load_config(args.config) if args.config else {}
    sys, ef = _built_eigenfunction(args, cfg_doc)
    spec = _parse_grid(args.grid, sys.dim, args.fixed)
    fld = field.eval_grid(ef, spec, workers=args.workers)
    ls = field.zero_level_set(fld, args.level, args.part)
    doc = {
        "lambda": _c(ef.lam),
        "level": args.level,
        "part": args.part,
        "skipped_cells": ls.skipped_cells,
        "polylines": [[[float(a), float(b)] for a, b in p] for p in ls.polylines],
    }
    _emit(doc, args)
    return 0


def cmd_lyapunov(args) -> int:
    cfg_doc = _load_config(args.config) if args.config else {}
    sys = _build_system(args, cfg_doc)
    icfg = _integrator_cfg(args, cfg_doc)
    eq = _equilibrium(args, cfg_doc, sys)
    model = lyapunov.build_model(sys, eq.point, icfg)
    spec = _parse_grid(args.grid, sys.dim, args.fixed)
    pts = spec.nodes()
    vals = lyapunov.V_batch(model, pts)
    fld = field.ScalarField(
        spec=spec,
        values=vals.astype(complex),
        statuses=np.asarray(["converged"] * len(vals), dtype=object),
    )
    out = args.out or cfg_doc.get("output", {}).get("path")
    if not out:
        raise KoopeigError("lyapunov needs --out")
    fmt = args.format or cfg_doc.get("output", {}).get("format", "csv")
    field.export_field(fld, fmt, out)
    return 0


def cmd_dataset(args) -> int:
    cfg_doc = _load_config(args.config) if args.config else {}
    if args.count < 1:
        raise KoopeigError("--count must be >= 1")
    sys, ef = _built_eigenfunction(args, cfg_doc)
    if args.domain:
        rows = [seg.split(":") for seg in args.domain.split(",")]
        if len(rows) != sys.dim or any(len(r) != 2 for r in rows):
            raise KoopeigError("--domain expects min:max per axis, comma separated")
        box = [[float(a), float(b)] for a, b in rows]
    elif sys.domain_box is not None:
        box = sys.domain_box
    else:
        raise KoopeigError("no --domain given and the system declares none")
    records, meta = datasetio.generate_dataset(
        ef, box, args.count, datasetio.UniformRandom(seed=args.seed),
        workers=args.workers,
    )
    if not args.out:
        raise KoopeigError("dataset needs --out")
    datasetio.write_dataset(records, meta, args.out)
    good = sum(r.status in ("converged", "truncated") for r in records)
    log.info("wrote %d records (%d certified) to %s", len(records), good, args.out)
    return 0


def cmd_verify(args) -> int:
    card = acceptance.run_suite(args.suite, echo=print)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(card, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        print(json.dumps(card, indent=2, sort_keys=True))
    return 0 if card["passed"] else 1


# ---------------------------------------------------------------------------


def _add_common(p, grid=True):
    p.add_argument("--system", help="builtin system name")
    p.add_argument("--param", action="append", metavar="k=v",
                   help="system parameter (repeatable)")
    p.add_argument("--eq", metavar="v1,..,vn", help="equilibrium guess")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=["csv", "json"], help="output format")
    p.add_argument("--workers", type=int, default=default_workers(),
                   help="parallel workers for grid/dataset evaluation")
    if grid:
        p.add_argument("--grid", metavar="min:max:count[,...]",
                       help="swept axes of the evaluation grid")
        p.add_argument("--fixed", action="append", metavar="axis=value",
                       help="hold a state axis fixed (0-based index)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="koopeig",
        description="Principal Koopman eigenfunctions via path integrals "
                    "along trajectories",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="equilibrium, linearization, spectrum, "
                                       "and mode applicability")
    _add_common(p, grid=False)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("eval", help="evaluate an eigenfunction on a grid or points")
    _add_common(p)
    p.add_argument("--lambda-index", type=int, default=0,
                   help="eigenvalue index, sorted by descending real part")
    p.add_argument("--point", action="append", metavar="v1,..,vn",
                   help="evaluate at a point instead of a grid (repeatable)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("manifold", help="zero level set of an eigenfunction")
    _add_common(p)
    p.add_argument("--lambda-index", type=int, default=0)
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument("--part", choices=["real", "imag", "magnitude"], default="real")
    p.set_defaults(fn=cmd_manifold)

    p = sub.add_parser("lyapunov", help="export V(x) on a grid")
    _add_common(p)
    p.set_defaults(fn=cmd_lyapunov)

    p = sub.add_parser("dataset", help="generate a labeled training dataset")
    _add_common(p, grid=False)
    p.add_argument("--lambda-index", type=int, default=0)
    p.add_argument("--domain", metavar="min:max[,...]",
                   help="sampling box, one min:max per axis")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--suite", choices=sorted(acceptance.SUITES), default="full")
    p.add_argument("--out", help="write the JSON scorecard here")
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code = args.fn(args)
    except ConditionViolated as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except KoopeigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    raise SystemExit(main())
