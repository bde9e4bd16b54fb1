"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ValringError(Exception):
    exit_code = 1


class PreconditionError(ValringError):
    """An operation was called on inputs outside its domain."""

    exit_code = 2


class InfiniteInitialIndexError(PreconditionError):
    pass


class MalformedSpecError(PreconditionError):
    pass


class NotEssentiallyFinitelyGenerated(PreconditionError):
    pass


class NotInValuationRing(PreconditionError):
    pass


class StepCapExceeded(ValringError):
    exit_code = 3


class PrecisionLimitError(ValringError):
    """Interval refinement gave up before separating a value from zero."""

    exit_code = 3


class ScenarioError(ValringError):
    exit_code = 4

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)
        self.message = message


class LiteralSyntaxError(ScenarioError, ValueError):
    pass


class NonSquarefreeRadicand(ScenarioError, ValueError):
    pass
