"""Reader for the labeled-dataset interchange format (version 1).

A dataset is the CSV ``x1..xn, phi_re, phi_im, h_re, h_im, status, T_used``
plus the ``<path>.meta.json`` sidecar carrying the system, equilibrium,
eigenpair, domain box, and sampling/integrator provenance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["DatasetMeta", "Dataset", "MetaMismatch", "FormatError", "load_dataset"]

SUPPORTED_FORMAT = "1"


class FormatError(Exception):
    """Unsupported or malformed dataset files."""


class MetaMismatch(Exception):
    """Metadata lacks fields the trainer needs."""


@dataclass(frozen=True)
class DatasetMeta:
    system_name: str
    system_params: dict
    polynomial: Optional[dict]
    x_star: np.ndarray
    lam: complex
    w: np.ndarray          # (n,) complex
    domain_box: np.ndarray  # (n, 2)


@dataclass(frozen=True)
class Dataset:
    meta: DatasetMeta
    x: np.ndarray          # (m, n) certified records only
    phi: np.ndarray        # (m,) complex labels
    statuses: np.ndarray   # (m,) str, all certified
    n_dropped: int         # escaped / failed records filtered out


def load_dataset(path) -> Dataset:
    """Load a dataset, filtering escaped and failed records."""
    path = str(path)
    try:
        with open(path + ".meta.json", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise FormatError(f"missing sidecar {path}.meta.json") from exc

    ver = str(doc.get("format_version"))
    if ver != SUPPORTED_FORMAT:
        raise FormatError(f"dataset format version {ver!r}, trainer supports {SUPPORTED_FORMAT!r}")
    for key in ("lambda", "w", "equilibrium", "domain_box", "system"):
        if key not in doc:
            raise MetaMismatch(f"metadata lacks '{key}'")

    meta = DatasetMeta(
        system_name=doc["system"]["name"],
        system_params=doc["system"].get("params", {}),
        polynomial=doc["system"].get("polynomial"),
        x_star=np.asarray(doc["equilibrium"], dtype=float),
        lam=complex(doc["lambda"]["re"], doc["lambda"]["im"]),
        w=np.array([complex(c["re"], c["im"]) for c in doc["w"]]),
        domain_box=np.asarray(doc["domain_box"], dtype=float),
    )

    n = meta.x_star.size
    xs, phis, statuses = [], [], []
    dropped = 0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        expect = [f"x{i+1}" for i in range(n)] + [
            "phi_re", "phi_im", "h_re", "h_im", "status", "T_used",
        ]
        if header != expect:
            raise FormatError(f"unexpected dataset header {header}")
        for line in fh:
            cells = line.rstrip("\n").split(",")
            status = cells[n + 4]
            if status not in ("converged", "truncated"):
                dropped += 1
                continue
            xs.append([float(c) for c in cells[:n]])
            phis.append(complex(float(cells[n]), float(cells[n + 1])))
            statuses.append(status)
    if not xs:
        raise FormatError(f"dataset {path} has no certified records")
    return Dataset(
        meta=meta,
        x=np.asarray(xs, dtype=float),
        phi=np.asarray(phis, dtype=complex),
        statuses=np.asarray(statuses, dtype=object),
        n_dropped=dropped,
    )
