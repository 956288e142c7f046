"""Vector fields, Jacobians, equilibria, and the linear/nonlinear decomposition.

A :class:`SystemInstance` bundles a smooth vector field ``f`` with its
dimension, parameters, and optional analytic Jacobian.  Fields are
vectorized: they accept arrays of shape ``(..., dim)`` and return the same
shape, evaluating each leading-axis entry independently (this is what lets
the integrator advance thousands of trajectories in lockstep).

All callables stored on a system are picklable (module-level functions,
:func:`functools.partial` thereof, or small callable classes) so instances
can be shipped to worker processes.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .errors import (
    ConfigError,
    MissingParam,
    NoConvergence,
    NonFiniteField,
    NonFiniteJacobian,
    SingularJacobian,
    UnknownSystem,
)

__all__ = [
    "SystemInstance",
    "Equilibrium",
    "Decomposition",
    "eval_field",
    "jacobian",
    "refine_equilibrium",
    "decompose_at",
    "builtin",
    "parse_polynomial",
    "BUILTIN_NAMES",
    "known_equilibria",
]


@dataclass(frozen=True)
class SystemInstance:
    """A smooth autonomous ODE system x' = f(x)."""

    name: str
    dim: int
    params: dict
    field: Callable[[np.ndarray], np.ndarray]
    analytic_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain_box: Optional[np.ndarray] = None  # (dim, 2) per-axis [min, max]
    polynomial_config: Optional[dict] = None  # set for parse_polynomial systems


@dataclass(frozen=True)
class Equilibrium:
    """A verified root of f, with its residual norm."""

    point: np.ndarray
    residual_norm: float


@dataclass(frozen=True)
class Decomposition:
    """f split at an equilibrium into A*y plus a purely nonlinear remainder.

    ``fn`` works in shifted coordinates y = x - x*:
    fn(y) = f(x* + y) - A @ y, so fn(0) = f(x*) ~ 0 and dfn/dy(0) ~ 0.
    """

    A: np.ndarray
    fn: Callable[[np.ndarray], np.ndarray]
    x_star: np.ndarray


class _ShiftedNonlinearPart:
    """Picklable callable computing fn(y) = f(x* + y) - A y."""

    def __init__(self, sys_field, A, x_star):
        self._field = sys_field
        self._A = A
        self._x_star = x_star

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self._field(self._x_star + y) - y @ self._A.T


# ---------------------------------------------------------------------------
# operations


def eval_field(sys: SystemInstance, x) -> np.ndarray:
    """Evaluate f(x), raising NonFiniteField on non-finite output."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != sys.dim:
        raise ValueError(f"state has dimension {x.shape[-1]}, system expects {sys.dim}")
    out = sys.field(x)
    if not np.all(np.isfinite(out)):
        if out.ndim == 1:
            bad = x
        else:
            bad = x[tuple(np.argwhere(~np.isfinite(out).all(axis=-1))[0])]
        raise NonFiniteField(bad)
    return out


def jacobian(sys: SystemInstance, x) -> np.ndarray:
    """Jacobian of f at a single point.

    Uses the analytic Jacobian when available, otherwise central finite
    differences with per-coordinate step 1e-6 * (1 + |x_i|).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.dim,):
        raise ValueError(f"expected a single state of dimension {sys.dim}")
    if sys.analytic_jacobian is not None:
        J = np.asarray(sys.analytic_jacobian(x), dtype=float)
    else:
        J = np.empty((sys.dim, sys.dim))
        for i in range(sys.dim):
            h = 1e-6 * (1.0 + abs(x[i]))
            e = np.zeros(sys.dim)
            e[i] = h
            J[:, i] = (sys.field(x + e) - sys.field(x - e)) / (2.0 * h)
    if not np.all(np.isfinite(J)):
        raise NonFiniteJacobian(x)
    return J


def refine_equilibrium(sys: SystemInstance, x0) -> Equilibrium:
    """Newton-refine a root of f starting from x0.

    Iterates until the residual drops below 1e-12 or 50 iterations; the
    accepted result must satisfy ||f(x*)|| <= 1e-10 * (1 + ||x*||).
    """
    x = np.asarray(x0, dtype=float).copy()
    res = float(np.linalg.norm(sys.field(x)))
    for _ in range(50):
        if res <= 1e-12:
            break
        J = jacobian(sys, x)
        try:
            step = np.linalg.solve(J, sys.field(x))
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"Newton step unsolvable at x={x}") from exc
        x = x - step
        res = float(np.linalg.norm(sys.field(x)))
    if res > 1e-10 * (1.0 + float(np.linalg.norm(x))):
        raise NoConvergence(
            f"equilibrium refinement stalled at residual {res:.3e} (start {x0})"
        )
    return Equilibrium(point=x, residual_norm=res)


def decompose_at(sys: SystemInstance, eq: Equilibrium) -> Decomposition:
    """Split f at the equilibrium into its linear part A and nonlinear remainder."""
    A = jacobian(sys, eq.point)
    return Decomposition(A=A, fn=_ShiftedNonlinearPart(sys.field, A, eq.point), x_star=np.asarray(eq.point, dtype=float))


# ---------------------------------------------------------------------------
# builtin benchmark systems


def _example1_field(x, alpha):
    x = np.asarray(x, dtype=float)
    return alpha * (x - x**3)


def _example1_jac(x, alpha):
    x = np.asarray(x, dtype=float)
    return np.array([[alpha * (1.0 - 3.0 * x[0] ** 2)]])


def _example2_field(x, lam1, lam2):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    # shared quartic bracket; equals (x1 - x2^2)^2 - x2
    B = x1**2 - x2 - 2.0 * x1 * x2**2 + x2**4
    f1 = -2.0 * lam2 * x2 * B + lam1 * (
        x1 + 4.0 * x1**2 * x2 - x2**2 - 8.0 * x1 * x2**3 + 4.0 * x2**5
    )
    f2 = 2.0 * lam1 * (x1 - x2**2) ** 2 - lam2 * B
    return np.stack([f1, f2], axis=-1)


def _example2_jac(x, lam1, lam2):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[0], x[1]
    B = x1**2 - x2 - 2.0 * x1 * x2**2 + x2**4
    B1 = 2.0 * x1 - 2.0 * x2**2
    B2 = -1.0 - 4.0 * x1 * x2 + 4.0 * x2**3
    p = x1 - x2**2
    return np.array(
        [
            [
                -2.0 * lam2 * x2 * B1 + lam1 * (1.0 + 8.0 * x1 * x2 - 8.0 * x2**3),
                -2.0 * lam2 * (B + x2 * B2)
                + lam1 * (4.0 * x1**2 - 2.0 * x2 - 24.0 * x1 * x2**2 + 20.0 * x2**4),
            ],
            [
                4.0 * lam1 * p - lam2 * B1,
                -8.0 * lam1 * x2 * p - lam2 * B2,
            ],
        ]
    )


def _duffing_field(x, delta):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([x2, x1 - delta * x2 - x1**3], axis=-1)


def _duffing_jac(x, delta):
    x = np.asarray(x, dtype=float)
    return np.array([[0.0, 1.0], [1.0 - 3.0 * x[0] ** 2, -delta]])


# Two-link arm constants.  The mass-matrix entries 8.33/0.33/1.33 are the
# rounded decimals of 25/3, 1/3, 4/3 (uniform rods, unit masses/lengths);
# the exact fractions reproduce the reference spectrum, the roundings do not.
_TL_M11 = 25.0 / 3.0
_TL_M12 = 1.0 / 3.0
_TL_B1 = 5.5
_TL_B2 = 0.001


def _twolink_field(x):
    x = np.asarray(x, dtype=float)
    q1, q2 = x[..., 0], x[..., 1]
    qd1, qd2 = x[..., 2], x[..., 3]
    c2 = np.cos(q2)
    s2 = np.sin(q2)
    m11 = 2.0 * c2 + _TL_M11
    m12 = c2 + _TL_M12
    m22 = _TL_M12
    det = m11 * m22 - m12 * m12
    # rhs of M qdd = -(B + C) qd - G, damping on the left-hand side
    cqd1 = -2.0 * qd1 * qd2 * s2 - qd2 * qd2 * s2
    cqd2 = qd1 * qd1 * s2
    g1 = 50.0 * np.sin(q1) + 5.0 * np.sin(q1 + q2)
    g2 = 5.0 * np.sin(q1 + q2)
    r1 = -_TL_B1 * qd1 - cqd1 - g1
    r2 = -_TL_B2 * qd2 - cqd2 - g2
    qdd1 = (m22 * r1 - m12 * r2) / det
    qdd2 = (-m12 * r1 + m11 * r2) / det
    return np.stack([qd1, qd2, qdd1, qdd2], axis=-1)


_PI_12 = math.pi / 12.0

_BUILTIN_SPECS = {
    "example1": {
        "dim": 1,
        "required": ("alpha",),
        "domain": [(-0.9, 0.9)],
    },
    "example2": {
        "dim": 2,
        "required": ("lambda1", "lambda2"),
        "domain": [(-0.5, 0.5), (-0.5, 0.5)],
    },
    "duffing": {
        "dim": 2,
        "required": ("delta",),
        "domain": [(-2.0, 2.0), (-2.0, 2.0)],
    },
    "twolink": {
        "dim": 4,
        "required": (),
        "domain": [(-_PI_12, _PI_12)] * 4,
    },
}

BUILTIN_NAMES = tuple(_BUILTIN_SPECS)

_KNOWN_EQUILIBRIA = {
    "example1": [[0.0]],
    "example2": [[0.0, 0.0]],
    "duffing": [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]],
    "twolink": [[0.0, 0.0, 0.0, 0.0]],
}


def known_equilibria(name: str) -> list:
    """Declared equilibria of a builtin system (as plain state lists)."""
    if name not in _KNOWN_EQUILIBRIA:
        raise UnknownSystem(f"no builtin system named '{name}'")
    return [np.asarray(p, dtype=float) for p in _KNOWN_EQUILIBRIA[name]]


def builtin(name: str, params: Optional[dict] = None) -> SystemInstance:
    """Construct one of the four builtin benchmark systems."""
    if name not in _BUILTIN_SPECS:
        raise UnknownSystem(
            f"no builtin system named '{name}' (choose from {', '.join(BUILTIN_NAMES)})"
        )
    spec = _BUILTIN_SPECS[name]
    params = dict(params or {})
    for p in spec["required"]:
        if p not in params:
            raise MissingParam(f"system '{name}' requires parameter '{p}'")
    extra = set(params) - set(spec["required"])
    if extra:
        raise ConfigError(f"system '{name}' got unknown parameters {sorted(extra)}")

    if name == "example1":
        a = float(params["alpha"])
        fld = functools.partial(_example1_field, alpha=a)
        jac = functools.partial(_example1_jac, alpha=a)
    elif name == "example2":
        l1, l2 = float(params["lambda1"]), float(params["lambda2"])
        fld = functools.partial(_example2_field, lam1=l1, lam2=l2)
        jac = functools.partial(_example2_jac, lam1=l1, lam2=l2)
    elif name == "duffing":
        d = float(params["delta"])
        fld = functools.partial(_duffing_field, delta=d)
        jac = functools.partial(_duffing_jac, delta=d)
    else:  # twolink
        fld = _twolink_field
        jac = None

    box = np.asarray(spec["domain"], dtype=float)
    return SystemInstance(
        name=name,
        dim=spec["dim"],
        params={k: float(v) for k, v in params.items()},
        field=fld,
        analytic_jacobian=jac,
        domain_box=box,
    )


# ---------------------------------------------------------------------------
# polynomial systems from config


class _PolynomialField:
    """Vectorized evaluation of polynomial equations c * prod(x_j^e_j)."""

    def __init__(self, dim, coeffs, expmats):
        self.dim = dim
        self.coeffs = coeffs      # list of (k_i,) float arrays
        self.expmats = expmats    # list of (k_i, dim) int arrays

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for i, (c, E) in enumerate(zip(self.coeffs, self.expmats)):
            if c.size == 0:
                continue
            # (..., k, dim) powers -> product over dim -> weighted sum over k
            monos = np.prod(x[..., None, :] ** E, axis=-1)
            out[..., i] = np.sum(monos * c, axis=-1)
        return out


class _PolynomialJacobian:
    def __init__(self, dim, coeffs, expmats):
        self.dim = dim
        self.coeffs = coeffs
        self.expmats = expmats

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        J = np.zeros((self.dim, self.dim))
        for i, (c, E) in enumerate(zip(self.coeffs, self.expmats)):
            for k in range(self.dim):
                ek = E[:, k]
                mask = ek > 0
                if not np.any(mask):
                    continue
                Ed = E[mask].copy()
                Ed[:, k] -= 1
                cd = c[mask] * ek[mask]
                monos = np.prod(x[None, :] ** Ed, axis=-1)
                J[i, k] = float(np.sum(monos * cd))
        return J


def parse_polynomial(config) -> SystemInstance:
    """Build a system from a polynomial config document.

    Accepts a dict (parsed JSON) or a JSON string of the form
    ``{"dim": n, "equations": [[{"c": coeff, "e": [e1..en]}, ...], ...]}``.
    The analytic Jacobian is derived term by term.
    """
    if isinstance(config, (str, bytes)):
        try:
            config = json.loads(config)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"polynomial config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("polynomial config must be a JSON object")
    try:
        dim = int(config["dim"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("polynomial config needs an integer 'dim'")
    if dim < 1:
        raise ConfigError("'dim' must be >= 1")
    eqs = config.get("equations")
    if not isinstance(eqs, list) or len(eqs) != dim:
        raise ConfigError(f"'equations' must be a list of {dim} term lists")

    coeffs, expmats = [], []
    for i, terms in enumerate(eqs):
        if not isinstance(terms, list):
            raise ConfigError(f"equation {i}: expected a list of terms")
        cs, es = [], []
        for j, term in enumerate(terms):
            if not isinstance(term, dict) or "c" not in term or "e" not in term:
                raise ConfigError(f"equation {i}, term {j}: need keys 'c' and 'e'")
            try:
                c = float(term["c"])
            except (TypeError, ValueError):
                raise ConfigError(f"equation {i}, term {j}: coefficient not a number")
            e = term["e"]
            if not isinstance(e, list) or len(e) != dim:
                raise ConfigError(f"equation {i}, term {j}: exponent vector must have length {dim}")
            try:
                e = [int(v) for v in e]
            except (TypeError, ValueError):
                raise ConfigError(f"equation {i}, term {j}: exponents must be integers")
            if any(v < 0 for v in e):
                raise ConfigError(f"equation {i}, term {j}: exponents must be non-negative")
            cs.append(c)
            es.append(e)
        coeffs.append(np.asarray(cs, dtype=float))
        expmats.append(np.asarray(es, dtype=int).reshape(len(es), dim))

    box = config.get("domain")
    if box is not None:
        box = np.asarray(box, dtype=float)
        if box.shape != (dim, 2):
            raise ConfigError(f"'domain' must be a {dim}x2 array of [min, max] rows")
    return SystemInstance(
        name=str(config.get("name", "polynomial")),
        dim=dim,
        params={},
        field=_PolynomialField(dim, coeffs, expmats),
        analytic_jacobian=_PolynomialJacobian(dim, coeffs, expmats),
        domain_box=box,
        polynomial_config={"dim": dim, "equations": eqs},
    )
