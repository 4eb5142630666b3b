"""Exception hierarchy shared by the latentlog modules."""


class LatentLogError(Exception):
    """Base class for all latentlog errors."""


class InvalidObservationError(LatentLogError, ValueError):
    """An observation the model cannot score, e.g. ``t > 0`` with ``o == 0``.

    ``indices`` lists the offending positions when raised from a batch call.
    """

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class ConvergenceError(LatentLogError, RuntimeError):
    """An iterative routine stopped before meeting its tolerance.

    ``best`` holds the best iterate found and ``residual`` its residual, so
    callers can decide whether the answer is usable anyway.
    """

    def __init__(self, message, best=None, residual=None, indices=()):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.indices = tuple(int(i) for i in indices)


class QuadratureError(ConvergenceError):
    """Adaptive quadrature did not reach the requested accuracy."""


class PriorFormatError(LatentLogError, ValueError):
    """A prior document could not be parsed or failed validation."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class DataError(LatentLogError, ValueError):
    """Tabular input could not be read (missing column, bad value, ...)."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
