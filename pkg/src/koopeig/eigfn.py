"""Principal eigenfunction construction, evaluation, and verification residuals.

An eigenfunction phi(x) = w^T (x - x*) + h(x) is evaluated by computing h
as a path integral along the trajectory through x.  The integration
direction and integrand are fixed by the stability class of the
linearization:

* stable equilibrium, gap condition satisfied  -> forward integration
* anti-stable equilibrium, mirrored condition  -> time-reversed integration
* saddle, Re(lambda) > 0                       -> forward integration
* saddle, Re(lambda) < 0                       -> time-reversed integration

Saddle modes have no a-priori applicability test; each evaluation carries
the integrator's tail estimate and status so callers can tell certified
values from escapes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import flow, spectral
from .errors import (
    ConditionViolated,
    DegenerateReference,
    NonConvergedNeighbor,
)
from .flow import Direction, IntegratorConfig, PathStatus
from .spectral import ConditionReport, EvaluationMode, Spectrum
from .systems import Decomposition, Equilibrium, SystemInstance, decompose_at

__all__ = [
    "PrincipalEigenfunction",
    "EigenEvaluation",
    "BatchEvaluation",
    "build",
    "evaluate",
    "evaluate_batch",
    "evaluate_finite_horizon",
    "eigen_property_residual",
    "pde_residual",
    "laplace_average",
    "laplace_average_batch",
    "calibrate_scale",
    "least_squares_scale",
    "conjugate",
    "bisect_zero_on_segments",
    "decay_diagnostic",
]


@dataclass(frozen=True)
class PrincipalEigenfunction:
    """A bound (lambda, w, mode) triple, evaluable at points via path integrals."""

    system: SystemInstance
    equilibrium: Equilibrium
    decomposition: Decomposition
    lam: complex
    w: np.ndarray                # (n,) complex, spectral normalization
    mode: EvaluationMode
    cfg: IntegratorConfig
    condition: ConditionReport
    spectrum: Spectrum
    eig_index: int
    decay_rate: float

    @property
    def direction(self) -> Direction:
        if self.mode in (EvaluationMode.STABLE_FORWARD, EvaluationMode.SADDLE_FORWARD):
            return Direction.FORWARD
        return Direction.REVERSED

    @property
    def mu(self) -> complex:
        return self.lam if self.direction is Direction.FORWARD else -self.lam


@dataclass(frozen=True)
class EigenEvaluation:
    """phi = w^T (x - x*) + h at a single point, with its certificate."""

    phi: complex
    h: complex
    status: PathStatus
    T_used: float
    tail_estimate: float


@dataclass(frozen=True)
class BatchEvaluation:
    phi: np.ndarray            # (m,) complex
    h: np.ndarray              # (m,) complex
    statuses: np.ndarray       # (m,) of PathStatus
    T_used: np.ndarray         # (m,)
    tail_estimates: np.ndarray  # (m,)


def _decay_rate_for(mode: EvaluationMode, lam: complex, condition: ConditionReport) -> float:
    if mode is EvaluationMode.SADDLE_FORWARD:
        return float(lam.real)
    if mode is EvaluationMode.SADDLE_REVERSE:
        return float(-lam.real)
    # gap modes: the negated condition margin is the integrand decay rate
    return float(-condition.condition_value)


def build(
    sys: SystemInstance,
    eq: Equilibrium,
    eig_index: int,
    cfg: Optional[IntegratorConfig] = None,
) -> PrincipalEigenfunction:
    """Bind the eig_index-th eigenvalue (descending real part) at eq."""
    cfg = cfg or IntegratorConfig()
    dec = decompose_at(sys, eq)
    spec = spectral.eig(dec.A)
    if not (0 <= eig_index < spec.dim):
        raise ValueError(f"eig_index {eig_index} out of range for dimension {spec.dim}")
    lam = complex(spec.eigenvalues[eig_index])
    w = spec.left_vectors[eig_index].copy()
    report = spectral.check_condition(spec, lam)
    if report.mode in (EvaluationMode.STABLE_FORWARD, EvaluationMode.ANTI_STABLE_REVERSE):
        if not report.satisfied:
            raise ConditionViolated(report)
    return PrincipalEigenfunction(
        system=sys,
        equilibrium=eq,
        decomposition=dec,
        lam=lam,
        w=w,
        mode=report.mode,
        cfg=cfg,
        condition=report,
        spectrum=spec,
        eig_index=eig_index,
        decay_rate=_decay_rate_for(report.mode, lam, report),
    )


def conjugate(ef: PrincipalEigenfunction) -> PrincipalEigenfunction:
    """The eigenfunction of the conjugate eigenvalue: phi_conj(x) = conj(phi(x))."""
    lam_c = np.conj(ef.lam)
    idx = int(np.argmin(np.abs(ef.spectrum.eigenvalues - lam_c)))
    return replace(
        ef,
        lam=complex(lam_c),
        w=np.conj(ef.w),
        eig_index=idx,
        condition=replace(ef.condition, lambda_max=complex(np.conj(ef.condition.lambda_max))),
    )


def evaluate_batch(ef: PrincipalEigenfunction, X) -> BatchEvaluation:
    """Evaluate phi at rows of X; statuses flag uncertified (escaped) values."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    values, t, tails, statuses, _ = flow.path_integral_batch(
        ef.decomposition, ef.system, ef.lam, ef.w, X,
        ef.direction, ef.cfg, decay_rate=ef.decay_rate,
    )
    lin = (X - ef.decomposition.x_star) @ ef.w
    return BatchEvaluation(
        phi=lin + values, h=values, statuses=statuses, T_used=t, tail_estimates=tails
    )


def evaluate(ef: PrincipalEigenfunction, x) -> EigenEvaluation:
    """Evaluate phi at one point."""
    b = evaluate_batch(ef, np.asarray(x, dtype=float).reshape(1, -1))
    return EigenEvaluation(
        phi=complex(b.phi[0]),
        h=complex(b.h[0]),
        status=b.statuses[0],
        T_used=float(b.T_used[0]),
        tail_estimate=float(b.tail_estimates[0]),
    )


def evaluate_finite_horizon(ef: PrincipalEigenfunction, x, T: float) -> complex:
    """Finite-horizon value w^T (x - x*) + g(T), boundary term dropped."""
    if not T > 0:
        raise ValueError("T must be positive")
    x = np.asarray(x, dtype=float)
    r = flow.path_integral(
        ef.decomposition, ef.system, ef.lam, ef.w, x,
        ef.direction, ef.cfg, decay_rate=ef.decay_rate, exact_T=float(T),
    )
    lin = complex(np.sum(ef.w * (x - ef.decomposition.x_star)))
    return lin + r.value


def _cexp(z: complex) -> complex:
    re = min(z.real, 700.0)
    return complex(np.exp(re) * np.cos(z.imag), np.exp(re) * np.sin(z.imag))


def laplace_average_batch(ef: PrincipalEigenfunction, X, T) -> np.ndarray:
    """Batch cross-check oracle exp(-mu T) w^T (s_T(x) - x*), per-lane horizons.

    The caller guarantees trajectories exist on [0, T]; escape detection is
    disabled so endpoints are propagated all the way to the horizon.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.broadcast_to(np.asarray(T, dtype=float), (X.shape[0],))
    cfg = replace(ef.cfg, escape_radius=1e300)
    out = np.empty(X.shape[0], dtype=complex)
    zero = T == 0.0
    if np.any(zero):
        out[zero] = (X[zero] - ef.decomposition.x_star) @ ef.w
    if np.any(~zero):
        idx = np.flatnonzero(~zero)
        ends, statuses, t = flow.integrate_to(
            ef.system, X[idx], T[idx], ef.direction, cfg
        )
        w_y = (ends - ef.decomposition.x_star) @ ef.w
        factors = np.array([_cexp(-ef.mu * tv) for tv in t])
        out[idx] = factors * w_y
    return out


def laplace_average(ef: PrincipalEigenfunction, x, T: float) -> complex:
    """Cross-check oracle exp(-mu T) w^T (s_T(x) - x*) along the natural direction."""
    return complex(
        laplace_average_batch(ef, np.asarray(x, dtype=float).reshape(1, -1), float(T))[0]
    )


def eigen_property_residual(ef: PrincipalEigenfunction, x, tau: float) -> float:
    """|phi(s_tau(x)) - e^{lambda tau} phi(x)| / max(1, |phi(x)|).

    s_tau is taken along the eigenfunction's natural time direction, so for
    reversed modes tau counts backward in physical time and the factor is
    e^{-lambda tau} accordingly.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    tau_signed = tau if ef.direction is Direction.FORWARD else -tau
    end, status, _ = flow.integrate_to(ef.system, x, float(tau), ef.direction, ef.cfg)
    e0 = evaluate(ef, x)
    e1 = evaluate(ef, end)
    if PathStatus.STEP_FAILURE in (e0.status, e1.status):
        raise NonConvergedNeighbor("eigenfunction evaluation failed along the orbit")
    factor = _cexp(ef.lam * tau_signed)
    return float(abs(e1.phi - factor * e0.phi) / max(1.0, abs(e0.phi)))


def pde_residual(ef: PrincipalEigenfunction, x, fd_step: float = 1e-4) -> float:
    """Residual of (dh/dx) f - lambda h + w^T f_n at x, gradient by central FD."""
    if not fd_step > 0:
        raise ValueError("fd_step must be positive")
    x = np.asarray(x, dtype=float)
    n = ef.system.dim
    pts = [x]
    for i in range(n):
        e = np.zeros(n)
        e[i] = fd_step
        pts.append(x + e)
        pts.append(x - e)
    b = evaluate_batch(ef, np.vstack(pts))
    ok = (PathStatus.CONVERGED, PathStatus.TRUNCATED)
    if any(s not in ok for s in b.statuses):
        bad = [i for i, s in enumerate(b.statuses) if s not in ok]
        raise NonConvergedNeighbor(
            f"stencil evaluations {bad} did not converge (status "
            f"{[b.statuses[i].value for i in bad]})"
        )
    h0 = complex(b.h[0])
    grad = np.array(
        [(b.h[1 + 2 * i] - b.h[2 + 2 * i]) / (2.0 * fd_step) for i in range(n)]
    )
    f = ef.system.field(x)
    fn = ef.decomposition.fn(x - ef.decomposition.x_star)
    val = complex(np.sum(grad * f)) - ef.lam * h0 + complex(np.sum(ef.w * fn))
    return float(abs(val))


def least_squares_scale(computed, reference) -> complex:
    """Closed-form complex c minimizing sum |c*computed - reference|^2."""
    computed = np.asarray(computed, dtype=complex).ravel()
    reference = np.asarray(reference, dtype=complex).ravel()
    denom = float(np.sum(np.abs(computed) ** 2))
    if denom == 0.0:
        raise DegenerateReference("computed values are identically zero")
    return complex(np.sum(np.conj(computed) * reference) / denom)


def calibrate_scale(
    ef: PrincipalEigenfunction, reference: Sequence[Tuple[np.ndarray, complex]]
) -> complex:
    """Least-squares complex scale aligning computed values with references.

    Eigenfunctions are defined up to a nonzero scalar; this fixes it for
    comparisons against analytic formulas.
    """
    if len(reference) < 2:
        raise ValueError("need at least 2 reference points")
    xs = np.vstack([np.asarray(p, dtype=float) for p, _ in reference])
    refs = np.array([v for _, v in reference], dtype=complex)
    if not np.any(np.abs(refs) > 0):
        raise ValueError("reference values are all zero")
    b = evaluate_batch(ef, xs)
    return least_squares_scale(b.phi, refs)


def bisect_zero_on_segments(ef: PrincipalEigenfunction, A, B, iters: int = 40):
    """Bisect sign changes of Re(phi) along segments [A_i, B_i], in lockstep.

    Segments whose endpoints do not straddle a sign change are dropped.
    Used to polish level-set vertices onto the actual zero crossing, which
    for a saddle eigenfunction localizes the invariant manifold far below
    the grid spacing.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
    B = np.atleast_2d(np.asarray(B, dtype=float)).copy()
    fa = evaluate_batch(ef, A).phi.real
    fb = evaluate_batch(ef, B).phi.real
    ok = fa * fb < 0
    lo, hi, flo = A[ok], B[ok], fa[ok]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = evaluate_batch(ef, mid).phi.real
        upper = flo * fm < 0
        hi = np.where(upper[:, None], mid, hi)
        lo = np.where(upper[:, None], lo, mid)
        flo = np.where(upper, flo, fm)
    return 0.5 * (lo + hi)


def decay_diagnostic(ef: PrincipalEigenfunction, x):
    """Boundary-term magnitude |phi - e^{-mu t} w^T (s_t - x*)| along the orbit.

    For a certified evaluation this is the remaining-tail magnitude and
    should shrink toward the stopping time.  Returns (times, magnitudes).
    """
    x = np.asarray(x, dtype=float)
    ev = evaluate(ef, x)
    traj = flow.integrate(ef.system, x, max(ev.T_used, 1e-6), ef.direction, ef.cfg)
    ts = traj.times
    ys = traj.states - ef.decomposition.x_star
    w_y = ys @ ef.w
    factors = np.array([_cexp(-ef.mu * t) for t in ts])
    mags = np.abs(ev.phi - factors * w_y)
    return ts, mags
