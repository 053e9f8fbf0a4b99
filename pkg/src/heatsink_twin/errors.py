"""Exception types shared across the workbench."""


class InvalidInputError(ValueError):
    """Arguments violate a precondition (bad range, non-finite value, ...)."""


class ShapeError(ValueError):
    """Array dimensions do not agree."""


class SolverFailure(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateFieldError(RuntimeError):
    pass


class TrainingFailure(RuntimeError):
    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class ConflictError(KeyError):
    pass


class NotFoundError(KeyError):
    pass


class ParseError(ValueError):
    """Malformed file content. ``locus`` names the line, section or field."""

    def __init__(self, message, locus=None):
        if locus is not None:
            message = f"{locus}: {message}"
        super().__init__(message)
        self.locus = locus
