"""Exception hierarchy shared by every planid module."""


class PlanIdError(ValueError):
    """Base class for all input and consistency errors raised by planid."""


class UnknownNodeError(PlanIdError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown node {name!r}")

    def __str__(self):
        return self.args[0]


class CycleError(PlanIdError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("graph contains the cycle " + " -> ".join(map(str, self.cycle)))


class InvalidQueryError(PlanIdError):
    """A separation query or plan query is malformed."""


class InvalidExpressionError(PlanIdError):
    """An interventional expression mentions latent nodes or overlapping sets."""


class PositivityError(PlanIdError):
    """A conditional factor was requested on a zero-probability event."""

    def __init__(self, factor, event):
        self.factor = factor
        self.event = dict(event)
        shown = ", ".join(f"{k}={v}" for k, v in self.event.items())
        super().__init__(f"non-positive conditioning event in {factor}: {shown}")


class FeasibilityError(PlanIdError):
    """An exhaustive search or table construction exceeds its size guard."""


class InternalInvariantError(RuntimeError):
    """A construction that should be impossible for valid inputs occurred."""


class ModelSyntaxError(PlanIdError):
    def __init__(self, message, line, column=1):
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"line {line}, column {column}: {message}")
