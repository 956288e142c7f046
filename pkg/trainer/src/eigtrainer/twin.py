"""Twin vector fields for the systems that appear in dataset metadata.

The trainer consumes datasets through their files only, so the vector
field needed by the PDE regularizer and trajectory replay is reconstructed
here from the metadata: by name for the four builtin benchmarks, or from
the embedded polynomial config otherwise.  All fields are vectorized over
leading axes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["UnknownSystem", "twin_field", "finite_difference_A", "rk4_trajectory"]


class UnknownSystem(Exception):
    """Dataset metadata names a system with no registered twin."""


def _example1(params):
    a = float(params["alpha"])

    def f(x):
        x = np.asarray(x, dtype=float)
        return a * (x - x**3)

    return f


def _example2(params):
    l1 = float(params["lambda1"])
    l2 = float(params["lambda2"])

    def f(x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        B = x1**2 - x2 - 2.0 * x1 * x2**2 + x2**4
        f1 = -2.0 * l2 * x2 * B + l1 * (
            x1 + 4.0 * x1**2 * x2 - x2**2 - 8.0 * x1 * x2**3 + 4.0 * x2**5
        )
        f2 = 2.0 * l1 * (x1 - x2**2) ** 2 - l2 * B
        return np.stack([f1, f2], axis=-1)

    return f


def _duffing(params):
    d = float(params["delta"])

    def f(x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([x2, x1 - d * x2 - x1**3], axis=-1)

    return f


def _twolink(params):
    m11c, m12c = 25.0 / 3.0, 1.0 / 3.0
    b1, b2 = 5.5, 0.001

    def f(x):
        x = np.asarray(x, dtype=float)
        q1, q2, qd1, qd2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
        c2, s2 = np.cos(q2), np.sin(q2)
        m11 = 2.0 * c2 + m11c
        m12 = c2 + m12c
        m22 = m12c
        det = m11 * m22 - m12 * m12
        r1 = -b1 * qd1 - (-2.0 * qd1 * qd2 * s2 - qd2 * qd2 * s2) - (
            50.0 * np.sin(q1) + 5.0 * np.sin(q1 + q2)
        )
        r2 = -b2 * qd2 - qd1 * qd1 * s2 - 5.0 * np.sin(q1 + q2)
        return np.stack(
            [qd1, qd2, (m22 * r1 - m12 * r2) / det, (-m12 * r1 + m11 * r2) / det],
            axis=-1,
        )

    return f


def _polynomial(config):
    dim = int(config["dim"])
    coeffs, expmats = [], []
    for terms in config["equations"]:
        coeffs.append(np.array([float(t["c"]) for t in terms]))
        expmats.append(
            np.array([[int(e) for e in t["e"]] for t in terms]).reshape(len(terms), dim)
        )

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for i, (c, E) in enumerate(zip(coeffs, expmats)):
            if c.size:
                monos = np.prod(x[..., None, :] ** E, axis=-1)
                out[..., i] = np.sum(monos * c, axis=-1)
        return out

    return f


_REGISTRY = {
    "example1": _example1,
    "example2": _example2,
    "duffing": _duffing,
    "twolink": _twolink,
}


def twin_field(meta):
    """Vector field for a dataset's system from its metadata."""
    name = meta.system_name
    if name in _REGISTRY:
        return _REGISTRY[name](meta.system_params)
    if meta.polynomial is not None:
        return _polynomial(meta.polynomial)
    raise UnknownSystem(f"no twin registered for system '{name}'")


def finite_difference_A(f, x_star):
    """Jacobian of the twin at the equilibrium, central differences."""
    x_star = np.asarray(x_star, dtype=float)
    n = x_star.size
    A = np.empty((n, n))
    for i in range(n):
        h = 1e-6 * (1.0 + abs(x_star[i]))
        e = np.zeros(n)
        e[i] = h
        A[:, i] = (f(x_star + e) - f(x_star - e)) / (2.0 * h)
    return A


def rk4_trajectory(f, x0, T, dt=0.005):
    """Fixed-step RK4 replay of the twin system; returns (times, states)."""
    steps = int(np.ceil(T / dt))
    ts = np.linspace(0.0, steps * dt, steps + 1)
    out = np.empty((steps + 1, np.asarray(x0).size))
    x = np.asarray(x0, dtype=float).copy()
    out[0] = x
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = x
    return ts, out
