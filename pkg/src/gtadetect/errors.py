"""Exception types raised by the detection library."""


class InvalidArgumentError(ValueError):
    """An argument violates the documented preconditions."""


class SingularSystemError(ArithmeticError):
    """A Gram matrix could not be factored (rank deficient or not PD)."""


class DegenerateCovarianceError(ArithmeticError):
    """A conditional variance came out nonpositive."""


class NumericFailureError(ArithmeticError):
    """Message passing produced an unnormalizable message."""


class BudgetExceededError(RuntimeError):
    """Exhaustive search would exceed the configured candidate budget."""

    def __init__(self, candidates, budget):
        super().__init__(
            f"exhaustive search needs {candidates} candidates, budget is {budget}"
        )
        self.candidates = candidates
        self.budget = budget
