"""Eigendecomposition of the linearization and spectral-gap condition checks.

Conventions:

* eigenvalues are sorted by descending real part, conjugate pairs adjacent
  with the positive-imaginary member first;
* left eigenvectors use the plain transpose, w^T A = lambda w^T, never the
  conjugate transpose, and are computed as rows of V^{-1} so that
  biorthogonality w_i^T v_j = delta_ij holds by construction;
* each w is normalized to unit 2-norm with its largest-magnitude component
  rotated to the positive real axis (eigenfunctions are defined up to a
  nonzero complex scalar, so any fixed convention works).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DefectiveMatrix, NotHyperbolic

__all__ = [
    "Spectrum",
    "ConditionReport",
    "StabilityClass",
    "EvaluationMode",
    "eig",
    "hyperbolicity",
    "classify",
    "check_condition",
]


class StabilityClass(Enum):
    STABLE = "stable"
    ANTI_STABLE = "anti_stable"
    SADDLE = "saddle"


class EvaluationMode(Enum):
    STABLE_FORWARD = "stable_forward"
    ANTI_STABLE_REVERSE = "anti_stable_reverse"
    SADDLE_FORWARD = "saddle_forward"
    SADDLE_REVERSE = "saddle_reverse"


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with biorthogonal right/left eigenvector sets."""

    eigenvalues: np.ndarray      # (n,) complex, descending real part
    right_vectors: np.ndarray    # (n, n) complex, columns v_i
    left_vectors: np.ndarray     # (n, n) complex, rows w_i^T

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True)
class ConditionReport:
    """Applicability report for a path-integral evaluation mode."""

    mode: EvaluationMode
    condition_value: float
    satisfied: bool
    lambda_max: complex
    boundedness_caveat: bool = False


_PAIR_TOL = 1e-9


def eig(A) -> Spectrum:
    """Full complex eigendecomposition of a real matrix.

    Left vectors are rows of V^{-1}; conjugate pairs are made exactly
    conjugate so downstream code can evaluate one member and mirror it.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    evals, V = np.linalg.eig(A)
    evals = evals.astype(complex)
    V = V.astype(complex)

    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1e12:
        raise DefectiveMatrix(
            f"eigenvector matrix condition number {cond:.3e} exceeds 1e12"
        )

    order = np.lexsort((-evals.imag, -evals.real))
    evals = evals[order]
    V = V[:, order]

    # enforce exact conjugate pairing of adjacent eigenvalues/vectors
    scale = 1.0 + np.max(np.abs(evals))
    i = 0
    n = evals.shape[0]
    while i < n - 1:
        if (
            abs(evals[i].imag) > _PAIR_TOL * scale
            and abs(evals[i + 1] - np.conj(evals[i])) <= 1e-8 * scale
        ):
            evals[i + 1] = np.conj(evals[i])
            V[:, i + 1] = np.conj(V[:, i])
            i += 2
        else:
            i += 1

    W = np.linalg.inv(V)

    # normalize: ||w_i|| = 1, largest-|.| component of w_i real positive;
    # rescale v_i inversely to preserve w_i^T v_j = delta_ij
    for i in range(n):
        w = W[i, :]
        k = int(np.argmax(np.abs(w)))
        s = np.linalg.norm(w) * (w[k] / abs(w[k]))
        W[i, :] = w / s
        V[:, i] = V[:, i] * s
        if abs(evals[i].imag) <= _PAIR_TOL * scale:
            evals[i] = complex(evals[i].real, 0.0)
            if np.max(np.abs(W[i, :].imag)) < 1e-9:
                W[i, :] = W[i, :].real
                V[:, i] = V[:, i].real

    # re-mirror normalized pairs exactly
    i = 0
    while i < n - 1:
        if abs(evals[i].imag) > _PAIR_TOL * scale and evals[i + 1] == np.conj(evals[i]):
            W[i + 1, :] = np.conj(W[i, :])
            V[:, i + 1] = np.conj(V[:, i])
            i += 2
        else:
            i += 1

    return Spectrum(eigenvalues=evals, right_vectors=V, left_vectors=W)


def hyperbolicity(s: Spectrum, tol: float = 1e-8) -> bool:
    """True when no eigenvalue real part is within tol of the imaginary axis."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return bool(np.min(np.abs(s.eigenvalues.real)) > tol)


def classify(s: Spectrum, tol: float = 1e-8) -> StabilityClass:
    """Stable / anti-stable / saddle split of a hyperbolic spectrum."""
    if not hyperbolicity(s, tol):
        raise NotHyperbolic(
            f"eigenvalue too close to the imaginary axis: {s.eigenvalues}"
        )
    re = s.eigenvalues.real
    if np.all(re < 0):
        return StabilityClass.STABLE
    if np.all(re > 0):
        return StabilityClass.ANTI_STABLE
    return StabilityClass.SADDLE


def _find_index(s: Spectrum, lam: complex) -> int:
    scale = 1.0 + np.max(np.abs(s.eigenvalues))
    d = np.abs(s.eigenvalues - lam)
    k = int(np.argmin(d))
    if d[k] > 1e-8 * scale:
        raise ValueError(f"{lam} is not an eigenvalue of this spectrum")
    return k


def check_condition(s: Spectrum, lam: complex) -> ConditionReport:
    """Spectral-gap / boundedness report for evaluating the lam eigenfunction.

    Stable class: condition value -Re(lam) + 2 Re(lam_max) with lam_max the
    eigenvalue closest to the imaginary axis (largest real part); must be
    negative for the forward path integral's boundary term to vanish.

    Anti-stable class: mirrored condition Re(lam) - 2 Re(lam_min) using the
    right-half-plane eigenvalue closest to the axis (smallest real part).

    Saddle class: no a-priori check exists; the report carries a
    boundedness caveat and a zero sentinel condition value.  Convergence is
    certified a posteriori per point by the integrator's tail estimate.
    """
    k = _find_index(s, lam)
    lam = complex(s.eigenvalues[k])
    cls = classify(s)
    re = s.eigenvalues.real

    if cls is StabilityClass.STABLE:
        lam_max = complex(s.eigenvalues[int(np.argmax(re))])
        value = -lam.real + 2.0 * lam_max.real
        return ConditionReport(
            mode=EvaluationMode.STABLE_FORWARD,
            condition_value=float(value),
            satisfied=bool(value < 0),
            lambda_max=lam_max,
        )
    if cls is StabilityClass.ANTI_STABLE:
        lam_min = complex(s.eigenvalues[int(np.argmin(re))])
        value = lam.real - 2.0 * lam_min.real
        return ConditionReport(
            mode=EvaluationMode.ANTI_STABLE_REVERSE,
            condition_value=float(value),
            satisfied=bool(value < 0),
            lambda_max=lam_min,
        )

    closest = complex(s.eigenvalues[int(np.argmin(np.abs(re)))])
    mode = (
        EvaluationMode.SADDLE_FORWARD if lam.real > 0 else EvaluationMode.SADDLE_REVERSE
    )
    return ConditionReport(
        mode=mode,
        condition_value=0.0,
        satisfied=True,
        lambda_max=closest,
        boundedness_caveat=True,
    )
