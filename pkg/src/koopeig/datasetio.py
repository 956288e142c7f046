"""Labeled dataset generation and the interchange format for the DNN trainer.

A dataset is a CSV of rows ``x1..xn, phi_re, phi_im, h_re, h_im, status,
T_used`` (17-significant-digit decimals, '\\n' line endings) plus a JSON
sidecar ``<path>.meta.json`` describing the system, equilibrium, eigenpair,
sampling law, and integrator configuration.  Identical seed and config
reproduce the files byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Tuple

import numpy as np

from . import eigfn
from ._pool import map_chunked
from .errors import FormatVersionMismatch, KoopeigError
from .eigfn import PrincipalEigenfunction
from .flow import IntegratorConfig, PathStatus

__all__ = [
    "DatasetRecord",
    "DatasetMeta",
    "UniformRandom",
    "Grid",
    "generate_dataset",
    "write_dataset",
    "read_dataset",
    "FORMAT_VERSION",
]

FORMAT_VERSION = "1"
_FMT = "%.17g"


@dataclass(frozen=True)
class UniformRandom:
    seed: int


@dataclass(frozen=True)
class Grid:
    counts: tuple


@dataclass(frozen=True)
class DatasetRecord:
    x: np.ndarray
    phi: complex
    h: complex
    status: str
    T_used: float


@dataclass(frozen=True)
class DatasetMeta:
    system_name: str
    system_params: dict
    polynomial: Optional[dict]      # config passthrough for non-builtin systems
    equilibrium: list               # x* as a plain list
    lam: complex
    w: list                         # list of complex
    domain_box: list                # [[min, max], ...]
    sample_count: int
    sampling: dict                  # {"mode": "uniform", "seed": s} or {"mode": "grid", "counts": [...]}
    integrator: dict
    format_version: str = FORMAT_VERSION

    def to_json_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "system": {
                "name": self.system_name,
                "params": self.system_params,
                "polynomial": self.polynomial,
            },
            "equilibrium": self.equilibrium,
            "lambda": {"re": self.lam.real, "im": self.lam.imag},
            "w": [{"re": c.real, "im": c.imag} for c in self.w],
            "domain_box": self.domain_box,
            "sample_count": self.sample_count,
            "sampling": self.sampling,
            "integrator": self.integrator,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DatasetMeta":
        ver = str(doc.get("format_version"))
        if ver != FORMAT_VERSION:
            raise FormatVersionMismatch(
                f"dataset format version {ver!r}, this reader supports {FORMAT_VERSION!r}"
            )
        return cls(
            system_name=doc["system"]["name"],
            system_params=doc["system"].get("params", {}),
            polynomial=doc["system"].get("polynomial"),
            equilibrium=list(doc["equilibrium"]),
            lam=complex(doc["lambda"]["re"], doc["lambda"]["im"]),
            w=[complex(c["re"], c["im"]) for c in doc["w"]],
            domain_box=[list(r) for r in doc["domain_box"]],
            sample_count=int(doc["sample_count"]),
            sampling=dict(doc["sampling"]),
            integrator=dict(doc["integrator"]),
        )


def _sample_points(domain_box: np.ndarray, count: int, sampling) -> Tuple[np.ndarray, dict]:
    lo, hi = domain_box[:, 0], domain_box[:, 1]
    if isinstance(sampling, UniformRandom):
        rng = np.random.default_rng(sampling.seed)
        pts = rng.uniform(lo, hi, size=(count, domain_box.shape[0]))
        return pts, {"mode": "uniform", "seed": int(sampling.seed)}
    if isinstance(sampling, Grid):
        counts = tuple(int(c) for c in sampling.counts)
        if len(counts) != domain_box.shape[0]:
            raise ValueError("grid counts must match the domain dimension")
        axes = [np.linspace(lo[i], hi[i], counts[i]) for i in range(len(counts))]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        return pts, {"mode": "grid", "counts": list(counts)}
    raise TypeError("sampling must be UniformRandom or Grid")


def _eval_chunk(ef, pts):
    b = eigfn.evaluate_batch(ef, pts)
    return b.phi, b.h, np.array([s.value for s in b.statuses], dtype=object), b.T_used


def generate_dataset(
    ef: PrincipalEigenfunction,
    domain_box,
    count: int,
    sampling,
    workers: int = 1,
) -> Tuple[List[DatasetRecord], DatasetMeta]:
    """Label sampled points with phi; escaped samples are kept but flagged."""
    domain_box = np.asarray(domain_box, dtype=float).reshape(-1, 2)
    if domain_box.shape[0] != ef.system.dim:
        raise ValueError("domain box dimension does not match the system")
    if isinstance(sampling, UniformRandom):
        if count < 1:
            raise ValueError("count must be >= 1")
        pts, sampling_doc = _sample_points(domain_box, count, sampling)
    else:
        pts, sampling_doc = _sample_points(domain_box, 0, sampling)

    parts = map_chunked(_eval_chunk, ef, pts, workers=workers, chunk=2048)
    phi = np.concatenate([p[0] for p in parts])
    h = np.concatenate([p[1] for p in parts])
    statuses = np.concatenate([p[2] for p in parts])
    T_used = np.concatenate([p[3] for p in parts])

    records = [
        DatasetRecord(
            x=pts[i], phi=complex(phi[i]), h=complex(h[i]),
            status=str(statuses[i]), T_used=float(T_used[i]),
        )
        for i in range(pts.shape[0])
    ]
    meta = DatasetMeta(
        system_name=ef.system.name,
        system_params=dict(ef.system.params),
        polynomial=ef.system.polynomial_config,
        equilibrium=[float(v) for v in ef.equilibrium.point],
        lam=ef.lam,
        w=[complex(c) for c in ef.w],
        domain_box=[[float(a), float(b)] for a, b in domain_box],
        sample_count=len(records),
        sampling=sampling_doc,
        integrator=dataclasses.asdict(ef.cfg),
    )
    return records, meta


def _header(dim: int) -> List[str]:
    return [f"x{i + 1}" for i in range(dim)] + [
        "phi_re", "phi_im", "h_re", "h_im", "status", "T_used",
    ]


def write_dataset(records: List[DatasetRecord], meta: DatasetMeta, path) -> None:
    """Write the CSV and its .meta.json sidecar."""
    path = str(path)
    dim = len(meta.equilibrium)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(",".join(_header(dim)) + "\n")
            for r in records:
                cells = [_FMT % v for v in r.x]
                cells += [
                    _FMT % r.phi.real, _FMT % r.phi.imag,
                    _FMT % r.h.real, _FMT % r.h.imag,
                    r.status, _FMT % r.T_used,
                ]
                fh.write(",".join(cells) + "\n")
        with open(path + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise KoopeigError(f"cannot write dataset to {path}: {exc}") from exc


def read_dataset(path) -> Tuple[List[DatasetRecord], DatasetMeta]:
    """Read a dataset; inverse of :func:`write_dataset`."""
    path = str(path)
    try:
        with open(path + ".meta.json", encoding="utf-8") as fh:
            meta = DatasetMeta.from_json_dict(json.load(fh))
    except FileNotFoundError as exc:
        raise KoopeigError(f"missing dataset sidecar {path}.meta.json") from exc
    except OSError as exc:
        raise KoopeigError(f"cannot read dataset sidecar: {exc}") from exc

    dim = len(meta.equilibrium)
    expect = _header(dim)
    records: List[DatasetRecord] = []
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split(",")
            if header != expect:
                raise KoopeigError(
                    f"dataset header {header} does not match dimension {dim} of the sidecar"
                )
            for line in fh:
                cells = line.rstrip("\n").split(",")
                x = np.array([float(c) for c in cells[:dim]])
                records.append(
                    DatasetRecord(
                        x=x,
                        phi=complex(float(cells[dim]), float(cells[dim + 1])),
                        h=complex(float(cells[dim + 2]), float(cells[dim + 3])),
                        status=cells[dim + 4],
                        T_used=float(cells[dim + 5]),
                    )
                )
    except OSError as exc:
        raise KoopeigError(f"cannot read dataset from {path}: {exc}") from exc
    return records, meta
