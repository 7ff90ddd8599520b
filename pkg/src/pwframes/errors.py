"""Exception types shared across the construction and schedule solvers."""

__all__ = [
    "DegenerateParameterizationError",
    "SingularConfigurationError",
    "ConstructionPreconditionError",
    "FeasibilityError",
]


class DegenerateParameterizationError(ValueError):
    """An angle configuration zeroes a coefficient that must stay nonzero."""


class SingularConfigurationError(ValueError):
    """A closed-form solve hit a vanishing denominator; pick other free angles."""


class ConstructionPreconditionError(ValueError):
    """Input masks or seeds violate a requirement of the mask builder."""


class FeasibilityError(ValueError):
    """A schedule admits no valid angle solution; names the violated bound."""

    def __init__(self, message: str, inequality: str = "", where: tuple = ()):
        super().__init__(message)
        self.inequality = inequality
        self.where = where
