"""Eigenfunction-based Lyapunov functions V(x) = Phi(x)^H P Phi(x).

P solves the Lyapunov equation Lambda^H P + P Lambda = -Q for a chosen
Hermitian positive-definite Q (identity by default).  Because the
eigenfunctions satisfy dPhi/dt = Lambda Phi along trajectories, V then
decreases at rate -Phi^H Q Phi wherever the evaluations are accurate.

The Hermitian form (conjugate transpose) keeps V real for complex
conjugate-pair eigenfunctions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import eigfn, flow
from .errors import EvaluationFailed, IndefiniteResult, UnstableLambda
from .eigfn import PrincipalEigenfunction
from .flow import Direction, IntegratorConfig, PathStatus
from .systems import SystemInstance, refine_equilibrium

__all__ = ["LyapunovModel", "solve_P", "build_model", "V", "V_batch", "vdot_sample"]


@dataclass(frozen=True)
class LyapunovModel:
    eigenfunctions: List[PrincipalEigenfunction]
    Lam: np.ndarray   # (k, k) diagonal complex
    P: np.ndarray     # (k, k) Hermitian PD
    Q: np.ndarray     # (k, k) Hermitian PD


def solve_P(Lam, Q) -> np.ndarray:
    """Closed-form Lyapunov solve for diagonal Lambda: P_ij = Q_ij / (-conj(l_i) - l_j)."""
    Lam = np.asarray(Lam, dtype=complex)
    if Lam.ndim == 2:
        lam = np.diag(Lam)
    else:
        lam = Lam
    if np.any(lam.real >= 0):
        raise UnstableLambda(f"all eigenvalues must have negative real part: {lam}")
    Q = np.atleast_2d(np.asarray(Q, dtype=complex))
    k = lam.size
    if Q.shape != (k, k):
        raise ValueError(f"Q must be {k}x{k}")
    if np.max(np.abs(Q - Q.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(Q))):
        raise IndefiniteResult("Q must be Hermitian")
    if np.min(np.linalg.eigvalsh(Q)) <= 0:
        raise IndefiniteResult("Q must be positive definite")
    denom = -np.conj(lam)[:, None] - lam[None, :]
    P = Q / denom
    if np.max(np.abs(P - P.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(P))):
        raise IndefiniteResult("solved P is not Hermitian")
    if np.min(np.linalg.eigvalsh(P)) <= 0:
        raise IndefiniteResult("solved P is not positive definite")
    return P


def build_model(
    sys: SystemInstance,
    eq_guess,
    cfg: Optional[IntegratorConfig] = None,
    Q=None,
) -> LyapunovModel:
    """Build the model from all eigenfunctions at a stable equilibrium."""
    eq = refine_equilibrium(sys, eq_guess)
    efs = [eigfn.build(sys, eq, i, cfg) for i in range(sys.dim)]
    lam = np.array([ef.lam for ef in efs])
    Q = np.eye(sys.dim, dtype=complex) if Q is None else np.asarray(Q, dtype=complex)
    P = solve_P(lam, Q)
    return LyapunovModel(eigenfunctions=efs, Lam=np.diag(lam), P=P, Q=Q)


def _phi_matrix(model: LyapunovModel, X) -> np.ndarray:
    """Phi values for all eigenfunctions at rows of X, shape (m, k).

    Conjugate-pair economy: the second member of each adjacent conjugate
    pair is the complex conjugate of the first and is not re-integrated.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = len(model.eigenfunctions)
    out = np.empty((X.shape[0], k), dtype=complex)
    i = 0
    while i < k:
        ef = model.eigenfunctions[i]
        b = eigfn.evaluate_batch(ef, X)
        bad = [s is PathStatus.STEP_FAILURE for s in b.statuses]
        if any(bad):
            raise EvaluationFailed([i], "Lyapunov component failed")
        out[:, i] = b.phi
        if (
            i + 1 < k
            and model.eigenfunctions[i + 1].lam == np.conj(ef.lam)
            and abs(ef.lam.imag) > 0
            and np.allclose(model.eigenfunctions[i + 1].w, np.conj(ef.w))
        ):
            out[:, i + 1] = np.conj(b.phi)
            i += 2
        else:
            i += 1
    return out


def V_batch(model: LyapunovModel, X) -> np.ndarray:
    """V at rows of X; real and nonnegative by the Hermitian form."""
    Phi = _phi_matrix(model, X)
    return np.real(np.einsum("mi,ij,mj->m", np.conj(Phi), model.P, Phi))


def V(model: LyapunovModel, x) -> float:
    return float(V_batch(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


def vdot_sample(model: LyapunovModel, x, dt: float = 1e-3) -> float:
    """Forward-difference estimate (V(s_dt(x)) - V(x)) / dt."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    sys = model.eigenfunctions[0].system
    cfg = model.eigenfunctions[0].cfg
    end, status, _ = flow.integrate_to(sys, x, dt, Direction.FORWARD, cfg)
    both = V_batch(model, np.vstack([x, end]))
    return float((both[1] - both[0]) / dt)


def vdot_sample_batch(model: LyapunovModel, X, dt: float = 1e-3) -> np.ndarray:
    if not dt > 0:
        raise ValueError("dt must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sys = model.eigenfunctions[0].system
    cfg = model.eigenfunctions[0].cfg
    ends, statuses, _ = flow.integrate_to(sys, X, dt, Direction.FORWARD, cfg)
    v0 = V_batch(model, X)
    v1 = V_batch(model, ends)
    return (v1 - v0) / dt
