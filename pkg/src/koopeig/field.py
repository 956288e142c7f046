"""Grid evaluation of eigenfunctions and zero-level-set extraction.

Grids are rectangular: each state axis is either swept (linspace) or held
fixed.  Values are stored flat in row-major order over the swept axes, so
results are independent of how the work was chunked across workers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from . import eigfn
from ._pool import map_chunked
from .errors import KoopeigError, NotTwoDimensional
from .flow import PathStatus

__all__ = [
    "Sweep",
    "Fixed",
    "GridSpec",
    "ScalarField",
    "LevelSet",
    "eval_grid",
    "zero_level_set",
    "export_field",
    "read_field",
]


@dataclass(frozen=True)
class Sweep:
    min: float
    max: float
    count: int


@dataclass(frozen=True)
class Fixed:
    value: float


@dataclass(frozen=True)
class GridSpec:
    """Per-axis sweep/fixed specification; swept axes define the grid shape."""

    axes: tuple

    def __post_init__(self):
        if not self.axes:
            raise ValueError("GridSpec needs at least one axis")
        swept = 0
        for a in self.axes:
            if isinstance(a, Sweep):
                if not (a.min < a.max):
                    raise ValueError(f"sweep needs min < max, got [{a.min}, {a.max}]")
                if a.count < 2:
                    raise ValueError("sweep count must be >= 2")
                swept += 1
            elif not isinstance(a, Fixed):
                raise TypeError("axes must be Sweep or Fixed")
        if swept < 1:
            raise ValueError("at least one axis must be swept")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def swept_axes(self) -> List[int]:
        return [i for i, a in enumerate(self.axes) if isinstance(a, Sweep)]

    @property
    def shape(self) -> tuple:
        return tuple(a.count for a in self.axes if isinstance(a, Sweep))

    def axis_values(self, i: int) -> np.ndarray:
        a = self.axes[i]
        if isinstance(a, Sweep):
            return np.linspace(a.min, a.max, a.count)
        return np.array([a.value])

    def nodes(self) -> np.ndarray:
        """All grid nodes, shape (prod(shape), dim), row-major over swept axes."""
        grids = np.meshgrid(*[self.axis_values(i) for i in range(self.dim)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class ScalarField:
    """Complex samples over a grid with per-node evaluation statuses."""

    spec: GridSpec
    values: np.ndarray     # (N,) complex, row-major over swept axes
    statuses: np.ndarray   # (N,) of str status names

    def value_grid(self) -> np.ndarray:
        return self.values.reshape(self.spec.shape)

    def status_grid(self) -> np.ndarray:
        return self.statuses.reshape(self.spec.shape)


@dataclass(frozen=True)
class LevelSet:
    """Ordered polylines in the two swept coordinates, plus skipped-cell count."""

    polylines: List[np.ndarray]   # each (k, 2)
    skipped_cells: int = 0


_VALID = ("converged", "truncated")


def _eval_chunk(ef, pts):
    b = eigfn.evaluate_batch(ef, pts)
    return b.phi, np.array([s.value for s in b.statuses], dtype=object)


def eval_grid(ef, spec: GridSpec, workers: int = 1, chunk: int = 512) -> ScalarField:
    """Evaluate an eigenfunction at every node; per-node failures land in statuses."""
    pts = spec.nodes()
    parts = map_chunked(_eval_chunk, ef, pts, workers=workers, chunk=chunk)
    values = np.concatenate([p[0] for p in parts])
    statuses = np.concatenate([p[1] for p in parts])
    return ScalarField(spec=spec, values=values, statuses=statuses)


# ---------------------------------------------------------------------------
# marching squares

_PARTS = ("real", "imag", "magnitude")


def _scalar_part(values: np.ndarray, part: str) -> np.ndarray:
    if part == "real":
        return values.real
    if part == "imag":
        return values.imag
    if part == "magnitude":
        return np.abs(values)
    raise ValueError(f"part must be one of {_PARTS}")


def zero_level_set(
    field: ScalarField, level: float = 0.0, part: str = "real"
) -> LevelSet:
    """March the `part` of the field at the given level over a 2D grid.

    Vertices sit on cell edges at the linear-interpolation crossing.
    Ambiguous saddle cells are resolved with the cell-center sample (mean
    of the four corners under bilinear interpolation).  Cells touching a
    node that escaped or failed are skipped and counted.
    """
    swept = field.spec.swept_axes
    if len(swept) != 2:
        raise NotTwoDimensional(f"level sets need exactly 2 swept axes, got {len(swept)}")
    z = _scalar_part(field.value_grid(), part)
    good = np.isin(field.status_grid(), _VALID)
    u = field.spec.axis_values(swept[0])
    v = field.spec.axis_values(swept[1])
    nu, nv = z.shape

    def interp(pa, pb, za, zb):
        t = (level - za) / (zb - za)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    segments = []   # ((edge_key_a, point_a), (edge_key_b, point_b))
    skipped = 0
    for i in range(nu - 1):
        for j in range(nv - 1):
            if not (good[i, j] and good[i + 1, j] and good[i, j + 1] and good[i + 1, j + 1]):
                skipped += 1
                continue
            z00, z10 = z[i, j], z[i + 1, j]
            z11, z01 = z[i + 1, j + 1], z[i, j + 1]
            case = (
                (1 if z00 > level else 0)
                | (2 if z10 > level else 0)
                | (4 if z11 > level else 0)
                | (8 if z01 > level else 0)
            )
            if case in (0, 15):
                continue
            p00, p10 = (u[i], v[j]), (u[i + 1], v[j])
            p11, p01 = (u[i + 1], v[j + 1]), (u[i], v[j + 1])
            # edges: bottom (j fixed, u varies), right, top, left
            eb = ("u", i, j)
            er = ("v", i + 1, j)
            et = ("u", i, j + 1)
            el = ("v", i, j)
            pb = lambda: (eb, interp(p00, p10, z00, z10))
            pr = lambda: (er, interp(p10, p11, z10, z11))
            pt = lambda: (et, interp(p01, p11, z01, z11))
            pl = lambda: (el, interp(p00, p01, z00, z01))
            table = {
                1: [(pb, pl)], 2: [(pb, pr)], 3: [(pr, pl)], 4: [(pr, pt)],
                6: [(pb, pt)], 7: [(pt, pl)], 8: [(pt, pl)], 9: [(pb, pt)],
                11: [(pr, pt)], 12: [(pr, pl)], 13: [(pb, pr)], 14: [(pb, pl)],
            }
            if case in (5, 10):
                center = 0.25 * (z00 + z10 + z11 + z01)
                center_in = center > level
                if case == 5:   # c00, c11 above: isolate c10 and c01 when center is above
                    pairs = [(pb, pr), (pt, pl)] if center_in else [(pb, pl), (pr, pt)]
                else:           # c10, c01 above: isolate c00 and c11 when center is above
                    pairs = [(pb, pl), (pr, pt)] if center_in else [(pb, pr), (pt, pl)]
            else:
                pairs = table[case]
            for pa, pc in pairs:
                segments.append((pa(), pc()))

    return LevelSet(polylines=_chain_segments(segments), skipped_cells=skipped)


def _chain_segments(segments) -> List[np.ndarray]:
    """Join marching-squares segments sharing an edge into ordered polylines."""
    if not segments:
        return []
    adj = {}
    for si, (a, b) in enumerate(segments):
        adj.setdefault(a[0], []).append((si, 0))
        adj.setdefault(b[0], []).append((si, 1))
    used = [False] * len(segments)
    polylines = []

    def walk(si, end):
        # follow the chain starting by exiting segment si through `end`
        pts = []
        cur, out = si, end
        while True:
            used[cur] = True
            a, b = segments[cur]
            first, last = (b, a) if out == 0 else (a, b)
            if not pts:
                pts.append(first[1])
            pts.append(last[1])
            nxt = [(sj, e) for sj, e in adj.get(last[0], []) if sj != cur and not used[sj]]
            if not nxt:
                return pts, last[0]
            cur, e = nxt[0]
            out = 1 - e

    for si in range(len(segments)):
        if used[si]:
            continue
        # walk both ways from this segment to capture open chains fully
        fwd, _ = walk(si, 1)
        used[si] = False
        bwd, _ = walk(si, 0)
        chain = list(reversed(bwd)) + fwd[1:]
        polylines.append(np.asarray(chain, dtype=float))
    return polylines


# ---------------------------------------------------------------------------
# export / import

_FMT = "%.17g"


def _coord_names(spec: GridSpec) -> List[str]:
    return [f"x{i + 1}" for i in spec.swept_axes]


def export_field(field: ScalarField, fmt: str, path) -> None:
    """Write the field as CSV (swept coords, phi_re, phi_im, status) or JSON."""
    fmt = fmt.lower()
    try:
        if fmt == "csv":
            nodes = field.spec.nodes()[:, field.spec.swept_axes]
            with open(path, "w", newline="", encoding="utf-8") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(_coord_names(field.spec) + ["phi_re", "phi_im", "status"])
                for row, val, st in zip(nodes, field.values, field.statuses):
                    wr.writerow(
                        [_FMT % c for c in row]
                        + [_FMT % val.real, _FMT % val.imag, st]
                    )
        elif fmt == "json":
            doc = {
                "grid": [
                    {"type": "sweep", "min": a.min, "max": a.max, "count": a.count}
                    if isinstance(a, Sweep)
                    else {"type": "fixed", "value": a.value}
                    for a in field.spec.axes
                ],
                "phi_re": [float(v) for v in field.values.real],
                "phi_im": [float(v) for v in field.values.imag],
                "statuses": list(field.statuses),
            }
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh)
        else:
            raise ValueError(f"unknown format '{fmt}'")
    except OSError as exc:
        raise KoopeigError(f"cannot write field to {path}: {exc}") from exc


def read_field(path, fmt: str, spec: Optional[GridSpec] = None) -> ScalarField:
    """Read a field written by :func:`export_field`.

    CSV does not carry fixed-axis information, so reading CSV requires the
    original GridSpec; JSON is self-describing.
    """
    fmt = fmt.lower()
    try:
        if fmt == "csv":
            if spec is None:
                raise ValueError("reading CSV requires the original GridSpec")
            values, statuses = [], []
            with open(path, newline="", encoding="utf-8") as fh:
                rd = csv.reader(fh)
                header = next(rd)
                ncoord = len(header) - 3
                for row in rd:
                    values.append(complex(float(row[ncoord]), float(row[ncoord + 1])))
                    statuses.append(row[ncoord + 2])
            return ScalarField(
                spec=spec,
                values=np.asarray(values, dtype=complex),
                statuses=np.asarray(statuses, dtype=object),
            )
        if fmt == "json":
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            axes = tuple(
                Sweep(a["min"], a["max"], a["count"])
                if a["type"] == "sweep"
                else Fixed(a["value"])
                for a in doc["grid"]
            )
            values = np.asarray(doc["phi_re"], dtype=float) + 1j * np.asarray(
                doc["phi_im"], dtype=float
            )
            return ScalarField(
                spec=GridSpec(axes=axes),
                values=values,
                statuses=np.asarray(doc["statuses"], dtype=object),
            )
        raise ValueError(f"unknown format '{fmt}'")
    except OSError as exc:
        raise KoopeigError(f"cannot read field from {path}: {exc}") from exc
