class DriftLabError(Exception):
    pass


class CapExceeded(DriftLabError, ValueError):
    """Problem size is above the exhaustive-enumeration cap."""


class LengthMismatch(DriftLabError, ValueError):
    pass


class SingularSystem(DriftLabError, ArithmeticError):
    """A non-optimal state has zero escape probability."""


class OptimalState(DriftLabError, ValueError):
    pass


class NotLinearLike(DriftLabError, ValueError):
    pass


class DomainError(DriftLabError, ValueError):
    pass


class ConfigError(DriftLabError, ValueError):
    pass
