class ParameterError(ValueError):
    """An argument is outside the domain where the operation is defined."""


class InsufficientDataError(ValueError):
    """Too few levels/samples/atoms left to produce an estimate."""


class NotApplicableError(ValueError):
    """The operation does not apply to this parameter regime."""


class PreconditionError(ValueError):
    """A documented precondition (e.g. grid/scale coupling) is violated."""
