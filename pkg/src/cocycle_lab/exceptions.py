"""Exception hierarchy shared across the package."""


class CocycleLabError(Exception):
    """Base class for all errors raised by cocycle_lab."""


class InvalidInputError(CocycleLabError, ValueError):
    pass


class InvalidParameterError(CocycleLabError, ValueError):
    pass


class SingularMatrixError(CocycleLabError, ArithmeticError):
    pass


class UndefinedDistanceError(CocycleLabError, ValueError):
    """Two finite words that coincide do not determine a distance."""


class InsufficientContextError(CocycleLabError, ValueError):
    """A symbol segment does not cover every coordinate a cocycle reads."""


class CapacityError(CocycleLabError, RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""
