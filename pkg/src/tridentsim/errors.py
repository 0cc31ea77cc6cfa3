"""Exception hierarchy shared by every module."""


class TridentSimError(Exception):
    """Base class for all simulator errors."""


class DimensionError(TridentSimError, ValueError):
    pass


class ParameterError(TridentSimError, ValueError):
    pass


class ParseError(TridentSimError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFormat(TridentSimError, ValueError):
    pass


class GridError(TridentSimError, ValueError):
    pass


class IncompleteTileSet(TridentSimError, ValueError):
    pass


class RoutingError(TridentSimError, LookupError):
    pass


class ScheduleError(TridentSimError, RuntimeError):
    pass


class DeadlockError(TridentSimError, RuntimeError):
    def __init__(self, message: str, blocked: dict | None = None):
        self.blocked = blocked or {}
        super().__init__(message)
