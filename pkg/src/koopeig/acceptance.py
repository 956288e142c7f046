"""Quantitative acceptance suite: analytic oracles plus property checks.

Each criterion is a standalone function returning a :class:`CriterionResult`;
``run_suite`` executes a named subset and assembles a JSON-ready scorecard.
The same functions back ``tests/test_acceptance.py`` and the CLI ``verify``
command.

Domain notes baked into the configurations below (see the module tests for
the underlying derivations):

* The saddle system of the two-dimensional analytic example is globally
  conjugate to its linearization, so off-manifold trajectories exit any
  finite radius in finite time while the quadrature tail is still
  shrinking.  Such evaluations stop with status "escaped" carrying a small
  certified tail; the grid comparison admits them when the certificate is
  below 1e-3.
* The reverse-mode eigenfunction of that system (the stable eigenvalue of
  the saddle) has a divergent path integral off the unstable manifold: the
  boundary term grows like exp(3t) there.  Its integral converges exactly
  on the manifold, where the eigenfunction happens to vanish, so the grid
  check is complemented by near-manifold probe points with nonzero
  reference values.
* The Duffing saddle eigenfunction decays to the tail tolerance with a
  basin-dependent sign; its zero crossing localizes the stable manifold to
  exponential accuracy, but marching-squares vertices only to grid
  accuracy, so the manifold criterion refines each vertex along its cell
  edge by bisection before the forward-integration membership test.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from . import datasetio, eigfn, field, flow, lyapunov, spectral, systems
from .eigfn import least_squares_scale
from .field import GridSpec, Sweep
from .flow import Direction, IntegratorConfig, PathStatus
from .spectral import EvaluationMode, StabilityClass

__all__ = ["CriterionResult", "run_suite", "CRITERIA", "SUITES"]


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    details: dict
    seconds: float


def _result(cid, name, passed, seconds, **details) -> CriterionResult:
    return CriterionResult(
        cid=cid, name=name, passed=bool(passed), seconds=round(seconds, 3),
        details=details,
    )


def _example1_phi(x):
    return x / np.sqrt(1.0 - x**2)


def _example2_phi2(x1, x2):
    return -(x1**2) + x2 + 2.0 * x1 * x2**2 - x2**4


def _build(name, params, eq_guess, index, cfg=None):
    sys = systems.builtin(name, params)
    eq = systems.refine_equilibrium(sys, eq_guess)
    return sys, eq, eigfn.build(sys, eq, index, cfg)


# ---------------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    """Stable 1D analytic example: 181-node sweep vs x/sqrt(1-x^2)."""
    t0 = time.perf_counter()
    _, _, ef = _build("example1", {"alpha": -1.0}, [0.0], 0)
    xs = np.linspace(-0.9, 0.9, 181).reshape(-1, 1)
    b = eigfn.evaluate_batch(ef, xs)
    ok_status = all(s is PathStatus.CONVERGED for s in b.statuses)
    ref = _example1_phi(xs[:, 0])
    c = least_squares_scale(b.phi, ref)
    rel = np.abs(c * b.phi - ref) / np.maximum(np.abs(ref), 1e-6)
    dt = time.perf_counter() - t0
    max_rel = float(np.max(rel))
    return _result(
        1, "example1 stable eigenfunction vs analytic",
        ok_status and max_rel < 1e-3 and dt < 10.0, dt,
        max_rel_error=max_rel, tolerance=1e-3, scale=abs(c), runtime_limit_s=10.0,
        all_converged=ok_status,
    )


def criterion_2() -> CriterionResult:
    """Anti-stable 1D example via time reversal: same oracle and tolerance."""
    t0 = time.perf_counter()
    _, _, ef = _build("example1", {"alpha": 1.0}, [0.0], 0)
    mode_ok = ef.mode is EvaluationMode.ANTI_STABLE_REVERSE
    xs = np.linspace(-0.9, 0.9, 181).reshape(-1, 1)
    b = eigfn.evaluate_batch(ef, xs)
    ok_status = all(s is PathStatus.CONVERGED for s in b.statuses)
    ref = _example1_phi(xs[:, 0])
    c = least_squares_scale(b.phi, ref)
    rel = np.abs(c * b.phi - ref) / np.maximum(np.abs(ref), 1e-6)
    dt = time.perf_counter() - t0
    max_rel = float(np.max(rel))
    return _result(
        2, "example1 anti-stable eigenfunction via reversal",
        mode_ok and ok_status and max_rel < 1e-3 and dt < 10.0, dt,
        max_rel_error=max_rel, tolerance=1e-3, mode=ef.mode.value,
    )


_EX2_CFG = IntegratorConfig(escape_radius=1e3)
_EX2_TAIL_OK = 5e-3


def criterion_3() -> CriterionResult:
    """2D saddle example: both eigenfunctions vs their analytic formulas."""
    t0 = time.perf_counter()
    sys, eq, ef2 = _build(
        "example2", {"lambda1": -1.0, "lambda2": 3.0}, [0.0, 0.0], 0, _EX2_CFG
    )
    grid = GridSpec(axes=(Sweep(-0.5, 0.5, 51), Sweep(-0.5, 0.5, 51)))
    pts = grid.nodes()

    # unstable eigenvalue, forward integration
    b2 = eigfn.evaluate_batch(ef2, pts)
    certified = np.array(
        [
            s in (PathStatus.CONVERGED, PathStatus.TRUNCATED)
            or (s is PathStatus.ESCAPED and tail <= _EX2_TAIL_OK)
            for s, tail in zip(b2.statuses, b2.tail_estimates)
        ]
    )
    ref2 = _example2_phi2(pts[:, 0], pts[:, 1])
    c2 = least_squares_scale(b2.phi[certified], ref2[certified])
    rms2 = float(
        np.linalg.norm(c2 * b2.phi[certified] - ref2[certified])
        / np.linalg.norm(ref2[certified])
    )

    # stable eigenvalue, reversed integration: converges only on the
    # unstable manifold x1 = x2^2 (where phi_l1 = 0); check the grid's
    # convergent subset plus near-manifold probes with nonzero reference
    ef1 = eigfn.build(sys, eq, 1, _EX2_CFG)
    b1 = eigfn.evaluate_batch(ef1, pts)
    conv1 = np.array([s is PathStatus.CONVERGED for s in b1.statuses])
    ref1 = pts[:, 0] - pts[:, 1] ** 2
    diff_on_grid = float(np.max(np.abs(b1.phi[conv1] - ref1[conv1]))) if np.any(conv1) else np.inf
    scale1 = float(np.linalg.norm(ref1) / np.sqrt(ref1.size))
    grid_ok = np.any(conv1) and diff_on_grid / scale1 < 1e-2

    rng = np.random.default_rng(7)
    x2p = rng.uniform(-0.45, 0.45, 50)
    off = 10.0 ** rng.uniform(-5.0, -4.0, 50) * rng.choice([-1.0, 1.0], 50)
    probes = np.stack([x2p**2 + off, x2p], axis=-1)
    bp = eigfn.evaluate_batch(ef1, probes)
    conv_p = np.array([s is PathStatus.CONVERGED for s in bp.statuses])
    refp = probes[:, 0] - probes[:, 1] ** 2
    rms1 = float(
        np.linalg.norm(bp.phi[conv_p] - refp[conv_p]) / np.linalg.norm(refp[conv_p])
    ) if np.any(conv_p) else np.inf

    dt = time.perf_counter() - t0
    passed = (
        bool(np.all(certified)) and rms2 < 1e-2 and grid_ok
        and int(np.sum(conv_p)) >= 40 and rms1 < 1e-2
    )
    return _result(
        3, "example2 saddle eigenfunctions vs analytic", passed, dt,
        rel_rms_unstable=rms2, tolerance=1e-2,
        certified_fraction=float(np.mean(certified)),
        grid_convergent_nodes_stable=int(np.sum(conv1)),
        grid_max_diff_stable=diff_on_grid,
        probe_rel_rms_stable=rms1,
        probe_convergent=int(np.sum(conv_p)),
        note="reverse-mode integral certified only on/near the unstable manifold",
    )


def criterion_4() -> CriterionResult:
    """Duffing linearization eigenvalues at both equilibria vs reference values."""
    t0 = time.perf_counter()
    sys = systems.builtin("duffing", {"delta": 0.5})
    eq0 = systems.refine_equilibrium(sys, [0.0, 0.0])
    eq1 = systems.refine_equilibrium(sys, [1.0, 0.0])
    s0 = spectral.eig(systems.decompose_at(sys, eq0).A)
    s1 = spectral.eig(systems.decompose_at(sys, eq1).A)
    err0 = [
        abs(s0.eigenvalues[0] - 0.78),
        abs(s0.eigenvalues[1] - (-1.28)),
    ]
    err1 = [
        abs(s1.eigenvalues[0] - (-0.25 + 1.39j)),
        abs(s1.eigenvalues[1] - (-0.25 - 1.39j)),
    ]
    dt = time.perf_counter() - t0
    worst = float(max(err0 + err1))
    return _result(
        4, "duffing linearization eigenvalues", worst < 0.01, dt,
        max_deviation=worst, tolerance=0.01,
        saddle=[_c(s0.eigenvalues[0]), _c(s0.eigenvalues[1])],
        focus=[_c(s1.eigenvalues[0]), _c(s1.eigenvalues[1])],
    )


def criterion_5() -> CriterionResult:
    """Koopman eigen-property residual for the Duffing saddle eigenfunction."""
    t0 = time.perf_counter()
    _, _, ef = _build("duffing", {"delta": 0.5}, [0.0, 0.0], 0)
    rng = np.random.default_rng(11)
    pts = rng.uniform(-2.0, 2.0, size=(100, 2))
    residuals = [eigfn.eigen_property_residual(ef, p, 0.5) for p in pts]
    dt = time.perf_counter() - t0
    worst = float(np.max(residuals))
    return _result(
        5, "duffing saddle eigen-property residual", worst <= 1e-2, dt,
        max_residual=worst, tolerance=1e-2, tau=0.5, points=100,
    )


# the plateau value of the converged saddle field scales with tail_tol while
# the quadrature noise floor scales with atol: keep them three decades apart
# so contour cells and sign bisection never flip on noise
_MANIFOLD_CFG = IntegratorConfig(
    rtol=1e-10, atol=1e-13, tail_tol=1e-9, T_max=60.0
)
_TIGHT_TRAJ_CFG = IntegratorConfig(rtol=1e-12, atol=1e-14)


_refine_vertices_on_edges = eigfn.bisect_zero_on_segments


def criterion_6() -> CriterionResult:
    """Stable manifold of the Duffing saddle: membership by forward flow."""
    t0 = time.perf_counter()
    sys, eq, ef = _build("duffing", {"delta": 0.5}, [0.0, 0.0], 0, _MANIFOLD_CFG)
    grid = GridSpec(axes=(Sweep(-2.0, 2.0, 61), Sweep(-2.0, 2.0, 61)))
    fld = field.eval_grid(ef, grid)
    ls = field.zero_level_set(fld, 0.0, "real")
    if not ls.polylines:
        return _result(
            6, "duffing stable manifold membership", False,
            time.perf_counter() - t0, vertices=0,
        )
    # the longest polyline is the separatrix through the origin; the short
    # ones are outer spiral wraps whose transit to the saddle exceeds the
    # 20 s membership horizon
    verts = max(ls.polylines, key=len)
    if verts.shape[0] < 20:
        return _result(
            6, "duffing stable manifold membership", False,
            time.perf_counter() - t0, vertices=int(verts.shape[0]),
        )
    pick = verts[np.linspace(0, verts.shape[0] - 1, 26, dtype=int)]

    # polish the vertices: bracket transverse to the contour by half a cell
    # on each side, then bisect the sign change of phi along that segment
    du = 4.0 / 60.0
    refined = []
    for axis in (0, 1):
        e = np.zeros(2)
        e[axis] = 0.55 * du
        r = _refine_vertices_on_edges(ef, pick - e, pick + e)
        refined.append(r)
        # keep only vertices not already refined along the first axis
        if axis == 0 and r.shape[0] >= 20:
            break
    refined = np.vstack(refined)[:26]
    ends, statuses, _ = flow.integrate_to(
        sys, refined, 20.0, Direction.FORWARD, _TIGHT_TRAJ_CFG
    )
    dists = np.linalg.norm(ends, axis=1)
    dt = time.perf_counter() - t0
    worst = float(np.max(dists)) if dists.size else np.inf
    return _result(
        6, "duffing stable manifold membership",
        refined.shape[0] >= 20 and worst <= 1e-2, dt,
        refined_vertices=int(refined.shape[0]),
        max_final_distance=worst, tolerance=1e-2, horizon_s=20.0,
        raw_vertices=int(verts.shape[0]), skipped_cells=ls.skipped_cells,
    )


def criterion_7() -> CriterionResult:
    """Lyapunov positivity and decrease around the Duffing stable focus."""
    t0 = time.perf_counter()
    sys = systems.builtin("duffing", {"delta": 0.5})
    model = lyapunov.build_model(sys, [1.0, 0.0])
    rng = np.random.default_rng(23)
    pts = []
    while len(pts) < 1000:
        p = rng.uniform(-0.5, 0.5, size=2)
        r = float(np.linalg.norm(p))
        if 0.05 <= r <= 0.5:
            pts.append([1.0 + p[0], p[1]])
    pts = np.asarray(pts)
    v = lyapunov.V_batch(model, pts)
    vd = lyapunov.vdot_sample_batch(model, pts, 1e-3)
    dt = time.perf_counter() - t0
    pos_frac = float(np.mean(v > 0))
    neg_frac = float(np.mean(vd < 0))
    return _result(
        7, "lyapunov positivity and decrease at duffing focus",
        pos_frac == 1.0 and neg_frac >= 0.99, dt,
        V_positive_fraction=pos_frac, Vdot_negative_fraction=neg_frac,
        samples=1000, requirement="V>0 at 100%, Vdot<0 at >=99%",
    )


_IDENTITY_CFG = IntegratorConfig(rtol=1e-10, atol=1e-13)
_IDENTITY_EX2_CFG = IntegratorConfig(rtol=1e-10, atol=1e-13, escape_radius=1e3)


def _identity_cases():
    """(label, dec, sys, lam, w, points, direction, cfg) per system and mode."""
    rng = np.random.default_rng(31)
    cases = []

    def add(label, sys, eq_guess, index, pts, cfg):
        eq = systems.refine_equilibrium(sys, eq_guess)
        ef = eigfn.build(sys, eq, index, cfg)
        cases.append((label, ef, pts))

    s1s = systems.builtin("example1", {"alpha": -1.0})
    add("example1 stable fwd", s1s, [0.0], 0,
        rng.uniform(-0.9, 0.9, (100, 1)), _IDENTITY_CFG)
    s1u = systems.builtin("example1", {"alpha": 1.0})
    add("example1 anti-stable rev", s1u, [0.0], 0,
        rng.uniform(-0.9, 0.9, (100, 1)), _IDENTITY_CFG)

    s2 = systems.builtin("example2", {"lambda1": -1.0, "lambda2": 3.0})
    add("example2 saddle fwd", s2, [0.0, 0.0], 0,
        rng.uniform(-0.5, 0.5, (100, 2)), _IDENTITY_EX2_CFG)
    x2 = rng.uniform(-0.5, 0.5, 100)
    add("example2 saddle rev (on-manifold)", s2, [0.0, 0.0], 1,
        np.stack([x2**2, x2], axis=-1), _IDENTITY_EX2_CFG)

    dsys = systems.builtin("duffing", {"delta": 0.5})
    add("duffing saddle fwd", dsys, [0.0, 0.0], 0,
        rng.uniform(-2.0, 2.0, (100, 2)), _IDENTITY_CFG)
    ball = rng.uniform(-0.5, 0.5, (100, 2))
    add("duffing focus stable fwd", dsys, [1.0, 0.0], 0,
        np.array([1.0, 0.0]) + ball, _IDENTITY_CFG)

    tl = systems.builtin("twolink")
    add("twolink stable fwd", tl, [0.0] * 4, 0,
        rng.uniform(-np.pi / 12, np.pi / 12, (100, 4)), _IDENTITY_CFG)
    return cases


def criterion_8() -> CriterionResult:
    """Accumulator identity residual across all systems and modes."""
    t0 = time.perf_counter()
    worst = {}
    for label, ef, pts in _identity_cases():
        res, statuses = flow.accumulator_identity_residual_batch(
            ef.decomposition, ef.system, ef.lam, ef.w, pts,
            ef.direction, ef.cfg, ef.decay_rate,
        )
        keep = [s is not PathStatus.STEP_FAILURE for s in statuses]
        worst[label] = float(np.max(res[keep]))
    dt = time.perf_counter() - t0
    overall = max(worst.values())
    return _result(
        8, "accumulator identity residual", overall <= 1e-6, dt,
        max_residual=overall, tolerance=1e-6, per_case=worst,
    )


def criterion_9() -> CriterionResult:
    """PDE residual at interior points for both analytic examples."""
    t0 = time.perf_counter()
    _, _, ef1 = _build("example1", {"alpha": -1.0}, [0.0], 0, _IDENTITY_CFG)
    rng = np.random.default_rng(43)
    pts1 = rng.uniform(-0.8, 0.8, (50, 1))
    r1 = [eigfn.pde_residual(ef1, p) for p in pts1]

    # the forward-mode eigenfunction of example2: stencil trajectories stay
    # bounded long enough only near the stable manifold x2 = (x1 - x2^2)^2
    cfg2 = IntegratorConfig(escape_radius=1e3, tail_tol=1e-7)
    _, _, ef2 = _build("example2", {"lambda1": -1.0, "lambda2": 3.0}, [0.0, 0.0], 0, cfg2)
    p1 = rng.uniform(-0.25, 0.25, 50)
    pts2 = np.stack([p1 + p1**4, p1**2], axis=-1)  # phi1 = p1, phi2 = 0
    r2 = [eigfn.pde_residual(ef2, p) for p in pts2]
    dt = time.perf_counter() - t0
    w1, w2 = float(np.max(r1)), float(np.max(r2))
    return _result(
        9, "PDE residual at interior points", max(w1, w2) <= 1e-3, dt,
        example1_max=w1, example2_max=w2, tolerance=1e-3, points=50,
    )


def criterion_10(workers: Optional[int] = None) -> CriterionResult:
    """Two-link arm: reference spectrum and bulk dataset generation."""
    t0 = time.perf_counter()
    sys = systems.builtin("twolink")
    eq = systems.refine_equilibrium(sys, [0.0] * 4)
    spec = spectral.eig(systems.decompose_at(sys, eq).A)
    targets = [-0.23 + 2.29j, -0.23 - 2.29j, -0.32 + 5.32j, -0.32 - 5.32j]
    devs = [
        min(abs(ev - t) for ev in spec.eigenvalues) for t in targets
    ]
    eig_ok = max(devs) < 0.02

    ef = eigfn.build(sys, eq, 0)
    box = [[-np.pi / 12, np.pi / 12]] * 4
    if workers is None:
        workers = 2
    records, meta = datasetio.generate_dataset(
        ef, box, 10000, datasetio.UniformRandom(seed=123), workers=workers
    )
    good = sum(r.status in ("converged", "truncated") for r in records)
    dt = time.perf_counter() - t0
    return _result(
        10, "twolink spectrum and dataset generation",
        eig_ok and good / len(records) >= 0.99 and dt < 600.0, dt,
        max_eig_deviation=float(max(devs)), eig_tolerance=0.02,
        good_fraction=good / len(records), records=len(records),
        runtime_limit_s=600.0, workers=workers,
    )


def criterion_11() -> CriterionResult:
    """Laplace-average oracle agrees with the path-integral values."""
    t0 = time.perf_counter()
    worst = {}
    for label, ef, pts in _identity_cases():
        b = eigfn.evaluate_batch(ef, pts)
        keep = np.array(
            [s is not PathStatus.STEP_FAILURE and t > 0.0
             for s, t in zip(b.statuses, b.T_used)]
        )
        lap = eigfn.laplace_average_batch(ef, pts[keep], b.T_used[keep])
        worst[label] = float(np.max(np.abs(lap - b.phi[keep])))
    dt = time.perf_counter() - t0
    overall = max(worst.values())
    tol = 10.0 * IntegratorConfig().tail_tol
    return _result(
        11, "laplace-average oracle equivalence", overall <= tol, dt,
        max_difference=overall, tolerance=tol, per_case=worst,
    )


def _c(z: complex) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}

SUITES = {
    "full": list(range(1, 12)),
    "analytic": [1, 2, 3, 4, 9],
}


def run_suite(suite: str = "full", echo=print) -> dict:
    """Run a suite; returns a scorecard dict with one entry per criterion."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite '{suite}' (choose from {sorted(SUITES)})")
    results = []
    for cid in SUITES[suite]:
        r = CRITERIA[cid]()
        results.append(r)
        if echo:
            echo(f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.cid}: {r.name} "
                 f"({r.seconds:.1f}s)")
    return {
        "suite": suite,
        "passed": all(r.passed for r in results),
        "criteria": [dataclasses.asdict(r) for r in results],
    }
