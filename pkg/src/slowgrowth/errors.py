"""Exception types shared across modules."""


class DomainError(ValueError):
    """Input lies outside the domain of an operation."""


class DegenerateTimeError(DomainError):
    """Requested time coincides with a conjugate time."""


class UnsupportedModelError(ValueError):
    """The model is outside the family for which a result is asserted."""


class NumericalError(ArithmeticError):
    """A numerical invariant was violated (e.g. a negative Gram determinant)."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index
