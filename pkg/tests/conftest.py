import numpy as np
import pytest

from koopeig import eigfn, systems
from koopeig.flow import IntegratorConfig


@pytest.fixture(scope="session")
def duffing():
    return systems.builtin("duffing", {"delta": 0.5})


@pytest.fixture(scope="session")
def duffing_saddle_ef(duffing):
    eq = systems.refine_equilibrium(duffing, [0.0, 0.0])
    return eigfn.build(duffing, eq, 0)


@pytest.fixture(scope="session")
def duffing_focus_ef(duffing):
    eq = systems.refine_equilibrium(duffing, [1.0, 0.0])
    return eigfn.build(duffing, eq, 0)


@pytest.fixture(scope="session")
def example1_stable_ef():
    sys = systems.builtin("example1", {"alpha": -1.0})
    eq = systems.refine_equilibrium(sys, [0.0])
    return eigfn.build(sys, eq, 0)


@pytest.fixture(scope="session")
def example1_antistable_ef():
    sys = systems.builtin("example1", {"alpha": 1.0})
    eq = systems.refine_equilibrium(sys, [0.0])
    return eigfn.build(sys, eq, 0)


@pytest.fixture(scope="session")
def example2():
    return systems.builtin("example2", {"lambda1": -1.0, "lambda2": 3.0})


@pytest.fixture(scope="session")
def example2_cfg():
    # trajectories exit any finite radius while the tail is still shrinking;
    # a raised radius lets most points converge or escape with a small
    # certified tail (see the acceptance module notes)
    return IntegratorConfig(escape_radius=1e3)


@pytest.fixture(scope="session")
def example2_unstable_ef(example2, example2_cfg):
    eq = systems.refine_equilibrium(example2, [0.0, 0.0])
    return eigfn.build(example2, eq, 0, example2_cfg)


@pytest.fixture(scope="session")
def example2_stable_ef(example2, example2_cfg):
    eq = systems.refine_equilibrium(example2, [0.0, 0.0])
    return eigfn.build(example2, eq, 1, example2_cfg)


@pytest.fixture(scope="session")
def twolink():
    return systems.builtin("twolink")


def linear_system(diag):
    """Linear diagonal system built through the polynomial config path."""
    n = len(diag)
    eqs = []
    for i, a in enumerate(diag):
        e = [0] * n
        e[i] = 1
        eqs.append([{"c": float(a), "e": e}])
    return systems.parse_polynomial({"dim": n, "equations": eqs})


def example1_phi(x):
    return x / np.sqrt(1.0 - x**2)


def example2_phi1(x1, x2):
    return x1 - x2**2


def example2_phi2(x1, x2):
    return -(x1**2) + x2 + 2.0 * x1 * x2**2 - x2**4
