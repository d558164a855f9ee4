"""Exception hierarchy shared by every clusterwatt module."""


class ClusterwattError(Exception):
    """Base class for all library errors."""


class InvalidSpec(ClusterwattError, ValueError):
    """A domain invariant does not hold; ``field`` names the offender."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class Infeasible(ClusterwattError):
    """No execution plan fits the hash table in memory for this design."""


class InsufficientData(ClusterwattError, ValueError):
    pass


class NoProgress(ClusterwattError, RuntimeError):
    """A simulated flow has work left but zero rate."""


class NoFeasibleDesign(ClusterwattError):
    pass


class ParseError(ClusterwattError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownKey(ParseError):
    pass


class MissingSection(ParseError):
    def __init__(self, section: str):
        self.section = section
        ClusterwattError.__init__(self, f"missing section [{section}]")
        self.line = 0
