import numpy as np
import pytest

from koopeig import datasetio, eigfn, systems
from koopeig.datasetio import Grid, UniformRandom
from koopeig.errors import FormatVersionMismatch, KoopeigError


@pytest.fixture(scope="module")
def small_dataset(example1_stable_ef_module):
    ef = example1_stable_ef_module
    return datasetio.generate_dataset(
        ef, [[-0.9, 0.9]], 100, UniformRandom(seed=42)
    )


@pytest.fixture(scope="module")
def example1_stable_ef_module():
    sys = systems.builtin("example1", {"alpha": -1.0})
    eq = systems.refine_equilibrium(sys, [0.0])
    return eigfn.build(sys, eq, 0)


def test_generate_all_converged(small_dataset):
    records, meta = small_dataset
    assert len(records) == 100
    assert all(r.status == "converged" for r in records)
    assert meta.sample_count == 100
    assert meta.sampling == {"mode": "uniform", "seed": 42}
    assert meta.lam == -1.0 + 0j


def test_generate_phi_minus_h_is_linear_part(small_dataset, example1_stable_ef_module):
    records, meta = small_dataset
    ef = example1_stable_ef_module
    for r in records[:20]:
        lin = complex(np.sum(ef.w * (r.x - ef.equilibrium.point)))
        # phi is stored as lin + h; recovering lin is exact up to one ulp
        assert abs((r.phi - r.h) - lin) <= 4e-16 * max(1.0, abs(lin))


def test_generate_single_point_at_equilibrium(example1_stable_ef_module):
    records, meta = datasetio.generate_dataset(
        example1_stable_ef_module, [[0.0, 0.0]], 1, UniformRandom(seed=1)
    )
    assert len(records) == 1
    assert abs(records[0].phi) <= 1e-9


def test_generate_grid_sampling(example1_stable_ef_module):
    records, meta = datasetio.generate_dataset(
        example1_stable_ef_module, [[-0.5, 0.5]], 0, Grid(counts=(11,))
    )
    assert len(records) == 11
    assert meta.sampling == {"mode": "grid", "counts": [11]}
    assert records[0].x[0] == -0.5 and records[-1].x[0] == 0.5


def test_roundtrip_bitwise(tmp_path, small_dataset):
    records, meta = small_dataset
    p = tmp_path / "data.csv"
    datasetio.write_dataset(records, meta, p)
    back, meta2 = datasetio.read_dataset(p)
    assert meta2 == meta
    assert len(back) == len(records)
    for a, b in zip(records, back):
        assert np.array_equal(a.x, b.x)
        assert a.phi == b.phi and a.h == b.h
        assert a.status == b.status and a.T_used == b.T_used


def test_reproducible_bytes(tmp_path, example1_stable_ef_module):
    ef = example1_stable_ef_module
    paths = []
    for tag in ("a", "b"):
        records, meta = datasetio.generate_dataset(
            ef, [[-0.9, 0.9]], 50, UniformRandom(seed=7)
        )
        p = tmp_path / f"data_{tag}.csv"
        datasetio.write_dataset(records, meta, p)
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert (tmp_path / "data_a.csv.meta.json").read_bytes() == (
        tmp_path / "data_b.csv.meta.json"
    ).read_bytes()


def test_missing_sidecar(tmp_path, small_dataset):
    records, meta = small_dataset
    p = tmp_path / "data.csv"
    datasetio.write_dataset(records, meta, p)
    (tmp_path / "data.csv.meta.json").unlink()
    with pytest.raises(KoopeigError):
        datasetio.read_dataset(p)


def test_header_dim_mismatch(tmp_path, small_dataset):
    records, meta = small_dataset
    p = tmp_path / "data.csv"
    datasetio.write_dataset(records, meta, p)
    text = p.read_text().splitlines()
    text[0] = "x1,x2,phi_re,phi_im,h_re,h_im,status,T_used"
    p.write_text("\n".join(text) + "\n")
    with pytest.raises(KoopeigError):
        datasetio.read_dataset(p)


def test_format_version_gate(tmp_path, small_dataset):
    import json

    records, meta = small_dataset
    p = tmp_path / "data.csv"
    datasetio.write_dataset(records, meta, p)
    side = tmp_path / "data.csv.meta.json"
    doc = json.loads(side.read_text())
    doc["format_version"] = "99"
    side.write_text(json.dumps(doc))
    with pytest.raises(FormatVersionMismatch):
        datasetio.read_dataset(p)


def test_escaped_records_retained_flagged(example2, example2_cfg):
    eq = systems.refine_equilibrium(example2, [0.0, 0.0])
    ef = eigfn.build(example2, eq, 1, example2_cfg)  # reverse mode escapes
    records, meta = datasetio.generate_dataset(
        ef, [[0.1, 0.4], [0.1, 0.4]], 20, UniformRandom(seed=3)
    )
    assert len(records) == 20
    assert any(r.status == "escaped" for r in records)


def test_spot_check_eigen_property(small_dataset, example1_stable_ef_module):
    records, _ = small_dataset
    ef = example1_stable_ef_module
    rng = np.random.default_rng(17)
    pick = rng.choice(len(records), 5, replace=False)
    for i in pick:
        r = eigfn.eigen_property_residual(ef, records[i].x, 0.25)
        assert r <= 1e-3


def test_workers_identical_output(example1_stable_ef_module):
    ef = example1_stable_ef_module
    a, _ = datasetio.generate_dataset(ef, [[-0.9, 0.9]], 60, UniformRandom(seed=5), workers=1)
    b, _ = datasetio.generate_dataset(ef, [[-0.9, 0.9]], 60, UniformRandom(seed=5), workers=2)
    for ra, rb in zip(a, b):
        assert ra.phi == rb.phi and ra.T_used == rb.T_used


def test_polynomial_passthrough_in_meta():
    cfg = {"dim": 1, "equations": [[{"c": -1.0, "e": [1]}, {"c": 1.0, "e": [3]}]]}
    sys = systems.parse_polynomial(cfg)
    eq = systems.refine_equilibrium(sys, [0.0])
    ef = eigfn.build(sys, eq, 0)
    records, meta = datasetio.generate_dataset(ef, [[-0.5, 0.5]], 5, UniformRandom(seed=2))
    assert meta.polynomial is not None
    assert meta.polynomial["dim"] == 1
