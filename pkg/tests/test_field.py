import numpy as np
import pytest

from koopeig import eigfn, field
from koopeig.errors import NotTwoDimensional
from koopeig.field import Fixed, GridSpec, ScalarField, Sweep
from koopeig.flow import PathStatus

from conftest import example1_phi


def synthetic_field(fn, u, v, statuses=None):
    spec = GridSpec(axes=(Sweep(u[0], u[-1], len(u)), Sweep(v[0], v[-1], len(v))))
    U, V = np.meshgrid(u, v, indexing="ij")
    values = fn(U, V).astype(complex).ravel()
    if statuses is None:
        statuses = np.asarray(["converged"] * values.size, dtype=object)
    return ScalarField(spec=spec, values=values, statuses=statuses)


# ---------------------------------------------------------------------------
# grid spec


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(axes=(Sweep(1.0, 0.0, 5),))
    with pytest.raises(ValueError):
        GridSpec(axes=(Sweep(0.0, 1.0, 1),))
    with pytest.raises(ValueError):
        GridSpec(axes=(Fixed(0.5),))
    spec = GridSpec(axes=(Sweep(0, 1, 3), Fixed(2.0), Sweep(-1, 1, 2)))
    assert spec.shape == (3, 2)
    assert spec.swept_axes == [0, 2]
    nodes = spec.nodes()
    assert nodes.shape == (6, 3)
    assert np.all(nodes[:, 1] == 2.0)
    # row-major over swept axes: last swept axis varies fastest
    assert np.allclose(nodes[0], [0.0, 2.0, -1.0])
    assert np.allclose(nodes[1], [0.0, 2.0, 1.0])
    assert np.allclose(nodes[2], [0.5, 2.0, -1.0])


# ---------------------------------------------------------------------------
# eval_grid


def test_eval_grid_example1(example1_stable_ef):
    spec = GridSpec(axes=(Sweep(-0.9, 0.9, 31),))
    fld = field.eval_grid(example1_stable_ef, spec)
    assert fld.values.shape == (31,)
    assert all(s == "converged" for s in fld.statuses)
    ref = example1_phi(spec.axis_values(0))
    c = eigfn.least_squares_scale(fld.values, ref)
    assert np.max(np.abs(c * fld.values - ref)) <= 1e-3 * np.max(np.abs(ref))


def test_eval_grid_contains_equilibrium(example1_stable_ef):
    spec = GridSpec(axes=(Sweep(-0.5, 0.5, 5),))  # node at exactly 0
    fld = field.eval_grid(example1_stable_ef, spec)
    assert abs(fld.values[2]) <= 1e-9


def test_eval_grid_workers_bitwise_identical(example1_stable_ef):
    spec = GridSpec(axes=(Sweep(-0.9, 0.9, 21),))
    a = field.eval_grid(example1_stable_ef, spec, workers=1, chunk=4)
    b = field.eval_grid(example1_stable_ef, spec, workers=2, chunk=4)
    assert np.array_equal(a.values, b.values)
    assert list(a.statuses) == list(b.statuses)


# ---------------------------------------------------------------------------
# marching squares


def test_level_set_vertical_line():
    u = np.linspace(-1, 1, 11)
    v = np.linspace(-1, 1, 11)
    fld = synthetic_field(lambda U, V: U, u, v)
    ls = field.zero_level_set(fld, 0.0, "real")
    assert ls.skipped_cells == 0
    assert len(ls.polylines) == 1
    pts = ls.polylines[0]
    assert np.max(np.abs(pts[:, 0])) <= 1e-14
    assert pts.shape[0] >= 11


def test_level_set_no_sign_change():
    u = v = np.linspace(-1, 1, 9)
    fld = synthetic_field(lambda U, V: U + 3.0, u, v)
    assert field.zero_level_set(fld).polylines == []


def test_level_set_vertices_interpolate_exactly():
    u = v = np.linspace(-1.0, 1.0, 13)
    a, b = 1.3, -0.7
    fld = synthetic_field(lambda U, V: a * U + b * V, u, v)
    ls = field.zero_level_set(fld, 0.25, "real")
    for poly in ls.polylines:
        for x, y in poly:
            assert a * x + b * y == pytest.approx(0.25, abs=1e-12)


def test_level_set_circle_closed_loop():
    u = v = np.linspace(-1.5, 1.5, 41)
    fld = synthetic_field(lambda U, V: U**2 + V**2 - 1.0, u, v)
    ls = field.zero_level_set(fld)
    assert len(ls.polylines) == 1
    poly = ls.polylines[0]
    radii = np.linalg.norm(poly, axis=1)
    h = 3.0 / 40
    assert np.max(np.abs(radii - 1.0)) <= h**2  # linear interpolation error
    # closed: endpoints coincide
    assert np.linalg.norm(poly[0] - poly[-1]) <= 1e-12


def test_level_set_refinement_tightens_vertex_residual():
    f = lambda U, V: np.sin(1.3 * U) + 0.8 * V
    residuals = []
    for n in (21, 41):
        u = v = np.linspace(-1.0, 1.0, n)
        fld = synthetic_field(f, u, v)
        ls = field.zero_level_set(fld)
        h = 2.0 / (n - 1)
        worst = 0.0
        for poly in ls.polylines:
            vals = np.abs(f(poly[:, 0], poly[:, 1]))
            worst = max(worst, float(np.max(vals)))
        # |f(vertex)| <= local gradient * spacing
        assert worst <= 2.1 * h
        residuals.append(worst)
    assert residuals[1] <= 0.6 * residuals[0]


def test_level_set_poisoned_cells_skipped():
    u = v = np.linspace(-1, 1, 5)
    statuses = np.asarray(["converged"] * 25, dtype=object)
    statuses[12] = "escaped"  # center node
    fld = synthetic_field(lambda U, V: U, u, v, statuses)
    ls = field.zero_level_set(fld)
    assert ls.skipped_cells == 4
    for poly in ls.polylines:
        assert np.max(np.abs(poly[:, 0])) <= 1e-14


def test_level_set_magnitude_part():
    u = v = np.linspace(-1.5, 1.5, 31)
    fld = synthetic_field(lambda U, V: (U + 1j * V), u, v)
    ls = field.zero_level_set(fld, 1.0, "magnitude")
    poly = np.vstack(ls.polylines)
    assert np.max(np.abs(np.linalg.norm(poly, axis=1) - 1.0)) <= 0.02


def test_level_set_requires_two_swept_axes():
    spec = GridSpec(axes=(Sweep(0, 1, 4),))
    fld = ScalarField(
        spec=spec,
        values=np.zeros(4, dtype=complex),
        statuses=np.asarray(["converged"] * 4, dtype=object),
    )
    with pytest.raises(NotTwoDimensional):
        field.zero_level_set(fld)


# ---------------------------------------------------------------------------
# export / import


def _random_field(rng, n1=7, n2=5):
    spec = GridSpec(axes=(Sweep(-1, 1, n1), Sweep(0, 2, n2)))
    values = rng.normal(size=n1 * n2) + 1j * rng.normal(size=n1 * n2)
    statuses = np.asarray(
        rng.choice(["converged", "truncated", "escaped"], n1 * n2), dtype=object
    )
    return ScalarField(spec=spec, values=values, statuses=statuses)


def test_export_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    fld = _random_field(rng)
    p = tmp_path / "field.csv"
    field.export_field(fld, "csv", p)
    back = field.read_field(p, "csv", fld.spec)
    assert np.array_equal(back.values, fld.values)
    assert list(back.statuses) == list(fld.statuses)
    lines = p.read_text().splitlines()
    assert len(lines) == 1 + 35
    assert lines[0] == "x1,x2,phi_re,phi_im,status"


def test_export_json_roundtrip(tmp_path):
    rng = np.random.default_rng(13)
    fld = _random_field(rng)
    p = tmp_path / "field.json"
    field.export_field(fld, "json", p)
    back = field.read_field(p, "json")
    assert np.array_equal(back.values, fld.values)
    assert back.spec == fld.spec


def test_export_two_node_grid(tmp_path):
    spec = GridSpec(axes=(Sweep(0, 1, 2),))
    fld = ScalarField(
        spec=spec,
        values=np.array([1 + 2j, 3 - 4j]),
        statuses=np.asarray(["converged", "converged"], dtype=object),
    )
    p = tmp_path / "two.csv"
    field.export_field(fld, "csv", p)
    assert len(p.read_text().splitlines()) == 3
