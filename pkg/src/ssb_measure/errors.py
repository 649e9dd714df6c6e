"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConfigurationError(ValueError):
    """Invalid parameters or integration settings (bad key, unstable step, ...)."""


class OptimizationError(RuntimeError):
    """A root search could not bracket or reach its target."""


class DegenerateEnsembleError(RuntimeError):
    """Every run in an ensemble was undecided, so no frequency exists."""
