class ValidationError(ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line!r}")
