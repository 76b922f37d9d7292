"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class HypothesisError(DomainError):
    """A bound was requested outside the hypotheses it is valid under.

    ``inequality`` names the failed condition so callers can report it.
    """

    def __init__(self, inequality, detail=""):
        self.inequality = inequality
        msg = f"hypothesis violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class OptimizationError(ArithmeticError):
    """An iterative routine produced a non-finite objective."""

    def __init__(self, iteration, message):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")
