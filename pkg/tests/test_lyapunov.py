import numpy as np
import pytest

from koopeig import lyapunov, systems
from koopeig.errors import IndefiniteResult, UnstableLambda

from conftest import linear_system


def test_solve_P_scalar():
    P = lyapunov.solve_P(np.array([-1.0 + 0j]), np.array([[1.0]]))
    assert P[0, 0] == pytest.approx(0.5)


def test_solve_P_conjugate_pair():
    lam = np.array([-0.25 + 1.39j, -0.25 - 1.39j])
    P = lyapunov.solve_P(lam, np.eye(2))
    assert P[0, 0] == pytest.approx(2.0)
    assert P[1, 1] == pytest.approx(2.0)
    assert abs(P[0, 1]) == 0.0
    # Lyapunov equation residual
    Lam = np.diag(lam)
    R = Lam.conj().T @ P + P @ Lam + np.eye(2)
    assert np.max(np.abs(R)) <= 1e-10


def test_solve_P_rejects_bad_inputs():
    with pytest.raises(UnstableLambda):
        lyapunov.solve_P(np.array([0.5 + 0j]), np.array([[1.0]]))
    with pytest.raises(IndefiniteResult):
        lyapunov.solve_P(np.array([-1.0 + 0j, -2.0 + 0j]), np.diag([1.0, -1.0]))
    with pytest.raises(IndefiniteResult):
        lyapunov.solve_P(
            np.array([-1.0 + 0j, -2.0 + 0j]), np.array([[1.0, 2.0], [0.0, 1.0]])
        )


@pytest.fixture(scope="module")
def duffing_model():
    duf = systems.builtin("duffing", {"delta": 0.5})
    return lyapunov.build_model(duf, [1.0, 0.0])


def test_model_invariants(duffing_model):
    m = duffing_model
    lam = np.diag(m.Lam)
    assert np.all(lam.real < 0)
    R = m.Lam.conj().T @ m.P + m.P @ m.Lam + m.Q
    assert np.max(np.abs(R)) <= 1e-10
    assert np.max(np.abs(m.P - m.P.conj().T)) <= 1e-12
    assert np.min(np.linalg.eigvalsh(m.P)) > 0


def test_V_at_equilibrium_and_nearby(duffing_model):
    assert lyapunov.V(duffing_model, [1.0, 0.0]) <= 1e-18
    assert lyapunov.V(duffing_model, [1.2, 0.0]) > 0


def test_V_batch_real_nonnegative(duffing_model):
    rng = np.random.default_rng(21)
    pts = np.array([1.0, 0.0]) + rng.uniform(-0.4, 0.4, (50, 2))
    v = lyapunov.V_batch(duffing_model, pts)
    assert v.dtype == float
    assert np.all(v >= 0)


def test_vdot_negative_in_basin(duffing_model):
    assert lyapunov.vdot_sample(duffing_model, [1.3, 0.1]) < 0
    assert abs(lyapunov.vdot_sample(duffing_model, [1.0, 0.0], 1e-3)) <= 1e-10


def test_linear_scalar_exactness():
    # x' = -x with phi = x and P = 1/2: V = x^2/2, Vdot = -x^2
    sys = linear_system([-1.0])
    model = lyapunov.build_model(sys, [0.0])
    assert model.P[0, 0] == pytest.approx(0.5, abs=1e-12)
    x = 0.4
    assert lyapunov.V(model, [x]) == pytest.approx(0.5 * x**2, rel=1e-8)
    vd = lyapunov.vdot_sample(model, [x], 1e-3)
    assert vd == pytest.approx(-(x**2), rel=0.01)


def test_linear_vdot_matches_quadratic_form():
    # for f = Ax the decrease rate is exactly -Phi^H Q Phi; the spectrum
    # must satisfy the gap condition so both eigenfunctions build
    sys = linear_system([-0.5, -0.9])
    model = lyapunov.build_model(sys, [0.0, 0.0])
    rng = np.random.default_rng(22)
    from koopeig import eigfn

    for _ in range(5):
        x = rng.uniform(-0.5, 0.5, 2)
        phi = np.array(
            [eigfn.evaluate(ef, x).phi for ef in model.eigenfunctions]
        )
        expect = -float(np.real(phi.conj() @ model.Q @ phi))
        vd = lyapunov.vdot_sample(model, x, 1e-3)
        assert vd == pytest.approx(expect, rel=0.01)
