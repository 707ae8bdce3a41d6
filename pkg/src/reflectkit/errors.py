"""Exception hierarchy shared by all modules."""


class ReflectKitError(Exception):
    pass


class DomainError(ReflectKitError, ValueError):
    """A query point lies outside the domain of a path."""


class ContractError(ReflectKitError, ValueError):
    """An input violates an operation's precondition."""


class RangeError(ReflectKitError, ValueError):
    """A path does not extend far enough to answer the request."""

    def __init__(self, message, needed=None):
        super().__init__(message)
        self.needed = needed


class ZenoError(ReflectKitError, RuntimeError):
    """Regime switches accumulate before the horizon."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class WellPosednessError(ReflectKitError, ValueError):
    """A zero-gap switch instance is ambiguous at the boundary."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
