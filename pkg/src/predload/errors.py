"""Exception hierarchy shared across the package."""


class PredloadError(Exception):
    pass


class ParameterError(PredloadError, ValueError):
    """Construction or algorithm parameters outside their admissible range."""


class InfeasibleError(PredloadError, ValueError):
    """A job has no machine (or route) with finite load."""


class UnassignedJobError(PredloadError, ValueError):
    pass


class ScaleError(PredloadError, ValueError):
    """An adversary construction does not fit on the integer slot grid."""


class ContractError(PredloadError, RuntimeError):
    """A policy does not satisfy a precondition of the construction it is run against."""


class OracleRefusal(PredloadError, RuntimeError):
    """Instance is larger than the exact solver's configured limit."""
