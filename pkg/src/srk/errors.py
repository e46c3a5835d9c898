"""Exception hierarchy shared by all srk modules."""


class SrkError(Exception):
    """Base class for every error raised by srk."""


class ValidationError(SrkError, ValueError):
    """An input breaks a model invariant (bad capacity, nonconvex cost, ...)."""


class ParseError(SrkError, ValueError):
    """A scenario, portfolio or contract file is malformed."""


class DisconnectedGraph(ValidationError):
    pass


class InvalidReactance(ValidationError):
    pass


class DomainViolation(SrkError, ValueError):
    """A cost function was evaluated outside its domain."""


class DimensionMismatch(ValidationError):
    pass


class InvalidIndex(ValidationError):
    pass


class IllPosedDerating(ValidationError):
    """FGR/ECR quantities exceed the physical line or storage capacity."""


class ProfileImbalance(ValidationError):
    """Contract production and consumption profiles do not carry the same energy."""


class HorizonMismatch(ValidationError):
    pass


class SolverFailure(SrkError, RuntimeError):
    """The convex kernel did not reach an optimal point."""


class InfeasibleScenario(SolverFailure):
    pass


class IdentityViolation(SrkError, ArithmeticError):
    """A settlement identity failed by more than the audit tolerance."""


class NotSimultaneouslyFeasible(SrkError):
    """An audit was requested for a portfolio that fails the SFT."""

    def __init__(self, message, verdict=None):
        super().__init__(message)
        self.verdict = verdict
