"""Exception hierarchy shared by every module of the package."""


class SemiSplitError(Exception):
    """Base class for all errors raised by semisplit."""


class NotPSD(SemiSplitError):
    pass


class NoConvergence(SemiSplitError):
    pass


class NotSummable(SemiSplitError):
    pass


class HypothesisViolated(SemiSplitError):
    pass


class RuleInapplicable(SemiSplitError):
    pass


class InvalidC(SemiSplitError):
    pass


class DegenerateClass(SemiSplitError):
    pass


class GammaOutOfRange(SemiSplitError):
    pass


class BranchPreconditionViolated(SemiSplitError):
    pass


class InteractionDominanceViolated(SemiSplitError):
    pass


class OutOfDomain(SemiSplitError):
    pass


class EmptyResolvent(SemiSplitError):
    pass


class RootSolveFailure(SemiSplitError):
    pass


class ZeroDetected(SemiSplitError):
    pass


class KappaViolated(SemiSplitError):
    pass


class InsufficientData(SemiSplitError):
    pass


class CertificateInfeasible(SemiSplitError):
    pass


class AssumptionViolated(SemiSplitError):
    """Raised when a standing assumption fails; ``clause`` names the failed part."""

    def __init__(self, clause, message=None):
        self.clause = clause
        super().__init__(message or clause)


class RelaxationWarning(UserWarning):
    """Emitted when a fixed relaxation parameter leaves the admissible window."""
