"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Permutations or designs with mismatched component counts."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class InvalidDesignError(ValueError):
    """A design or half-design violates its structural invariants."""


class ConstructionError(RuntimeError):
    """A design of the requested size cannot be built."""


class ConditioningError(ArithmeticError):
    """A kernel matrix could not be factorized."""


class DesignFileError(ValueError):
    """A design file could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
