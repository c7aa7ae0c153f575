"""Exception hierarchy shared by all modules."""


class JacobiError(Exception):
    """Base class for errors raised by this package."""


class ExpressionSyntaxError(JacobiError, ValueError):
    """Malformed expression text; ``offset`` is the 0-based byte offset."""

    def __init__(self, message: str, text: str, offset: int):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at offset {offset} in {text!r}")


class UnknownIdentifier(JacobiError, ValueError):
    def __init__(self, name: str, allowed=()):
        self.name = name
        hint = f" (chart coordinates: {', '.join(allowed)})" if allowed else ""
        super().__init__(f"unknown identifier {name!r}{hint}")


class DomainError(JacobiError, ArithmeticError):
    """An expression is not defined at a point.

    ``expr`` is the offending subexpression when it is known.
    """

    def __init__(self, message: str, expr=None, point=None):
        self.expr = expr
        self.point = point
        super().__init__(message)


class ChartMismatch(JacobiError, ValueError):
    pass


class StepCountExceeded(JacobiError, RuntimeError):
    pass


class EmptyBasis(JacobiError, ValueError):
    pass


class DegenerateSampling(JacobiError, RuntimeError):
    pass


class ConstantGaugeRefused(JacobiError, ValueError):
    pass


class ConfigError(JacobiError, ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = ""
        if key:
            where += f" [{key}]"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{message}{where}")
