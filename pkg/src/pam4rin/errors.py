"""Exception hierarchy shared by every stage of the link simulator."""


class LinkError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(LinkError, ValueError):
    """Invalid or unsupported parameter."""


class InvalidSeedError(ConfigurationError):
    pass


class StabilityError(ConfigurationError):
    """Adaptation step exceeds the LMS stability bound."""


class LengthError(LinkError, ValueError):
    pass


class AlphabetError(LinkError, ValueError):
    """Value outside the PAM4 alphabet {-3, -1, +1, +3}."""


class DomainError(LinkError, ValueError):
    pass


class RangeError(LinkError, ValueError):
    pass


class CoverageError(LinkError, ValueError):
    """Frequency range not covered by a RIN profile or spectrum."""


class DegenerateSignalError(LinkError, ValueError):
    pass


class DivergenceError(LinkError, ArithmeticError):
    def __init__(self, index: int):
        super().__init__(f"equalizer diverged at symbol {index}")
        self.index = index


class FramingError(LinkError, ValueError):
    pass


class AlignmentError(LinkError, ValueError):
    pass


class CalibrationError(LinkError):
    pass


class UnknownKeyError(ConfigurationError):
    pass


class ConfigParseError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


class StageError(LinkError):
    """Wraps an error raised inside a pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
