"""Exception types raised across the package."""


class HistoriesError(Exception):
    """Base class for all package errors."""


class ValidationError(HistoriesError, ValueError):
    """An operator or construction fails its role invariants."""


class CompletenessViolation(ValidationError):
    """Projectors of a family do not sum to the identity."""


class ExclusivityViolation(ValidationError):
    """Two projectors of a family overlap."""


class AxiomViolation(HistoriesError):
    """A decoherence functional breaks hermiticity, positivity or normalization."""


class NotDecoherent(HistoriesError):
    """Probabilities were requested for a set that does not decohere."""


class NotMediumDecoherent(HistoriesError):
    """Branches of a pure-state history set are not mutually orthogonal."""


class NotStronglyDecoherent(HistoriesError):
    """No verified record operators exist for the set."""


class SubspacesNotOrthogonal(HistoriesError):
    """Candidate record subspaces overlap."""


class VerificationFailed(HistoriesError):
    """Candidate records do not satisfy C_a rho = R_a rho."""


class NotConverged(HistoriesError):
    """The max-entropy dual solver hit its iteration limit."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
