"""Exception hierarchy for the koopeig package."""


class KoopeigError(Exception):
    """Base class for all package errors."""


class NonFiniteField(KoopeigError):
    """Vector field returned a non-finite value."""

    def __init__(self, point, message="vector field returned non-finite values"):
        super().__init__(f"{message} at x={point}")
        self.point = point


class NonFiniteJacobian(KoopeigError):
    """Jacobian evaluation produced non-finite entries."""

    def __init__(self, point):
        super().__init__(f"Jacobian has non-finite entries at x={point}")
        self.point = point


class NoConvergence(KoopeigError):
    """Newton refinement of an equilibrium did not converge."""


class SingularJacobian(KoopeigError):
    """Newton step could not be solved."""


class UnknownSystem(KoopeigError):
    """Requested builtin system name is not registered."""


class MissingParam(KoopeigError):
    """A required system parameter was not supplied."""


class ConfigError(KoopeigError):
    """Malformed configuration document."""


class DefectiveMatrix(KoopeigError):
    """Eigenvector matrix is numerically singular (defective or near-defective)."""


class NotHyperbolic(KoopeigError):
    """Linearization has eigenvalues too close to the imaginary axis."""


class NonEigenpair(KoopeigError):
    """Supplied (lambda, w) does not satisfy w^T A = lambda w^T."""


class ConditionViolated(KoopeigError):
    """Spectral-gap condition required by the selected mode fails."""

    def __init__(self, report):
        super().__init__(
            f"spectral-gap condition violated: mode={report.mode.name}, "
            f"condition_value={report.condition_value:.6g}"
        )
        self.report = report


class NonConvergedNeighbor(KoopeigError):
    """A finite-difference stencil point could not be evaluated."""


class DegenerateReference(KoopeigError):
    """Scale calibration impossible: computed values are identically zero."""


class UnstableLambda(KoopeigError):
    """Lyapunov solve requires all eigenvalues in the open left half plane."""


class IndefiniteResult(KoopeigError):
    """Matrix expected to be positive definite is not."""


class EvaluationFailed(KoopeigError):
    """One or more eigenfunction components failed to evaluate."""

    def __init__(self, failed_indices, message="eigenfunction evaluation failed"):
        super().__init__(f"{message}: components {list(failed_indices)}")
        self.failed_indices = list(failed_indices)


class NotTwoDimensional(KoopeigError):
    """Level-set extraction needs a field with exactly two swept axes."""


class FormatVersionMismatch(KoopeigError):
    """Dataset file format version is not supported."""
