"""Exception types raised by the toolkit."""


class MemdpError(Exception):
    """Base class for all toolkit errors."""


class SyntaxError(MemdpError):  # noqa: A001 - shadows the builtin on purpose inside this package
    """Malformed input text. Carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(MemdpError):
    """A parsed model or strategy breaks an invariant."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class RequiresRevealedForm(MemdpError):
    pass


class RequiresNormalForm(MemdpError):
    pass


class RequiresTrivialDecs(MemdpError):
    pass


class InvalidZeroSet(MemdpError):
    pass


class TooLarge(MemdpError):
    pass


class NotDistinguishing(MemdpError):
    pass


class NotLimitSureYes(MemdpError):
    pass


class InconsistentHistory(MemdpError):
    pass


class UnknownCorpusEntry(MemdpError):
    pass
