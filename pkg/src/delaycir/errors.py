"""Exception types raised across the package."""


class DelayCIRError(Exception):
    """Base class for every error raised by delaycir."""


class ModelError(DelayCIRError, ValueError):
    pass


class NonPositiveParameter(ModelError):
    pass


class NonPositiveHistory(ModelError):
    pass


class BadHistoryGrid(ModelError):
    pass


class OutOfHistoryRange(ModelError):
    pass


class GridError(DelayCIRError, ValueError):
    pass


class DelayMisaligned(GridError):
    """tau/h is not a positive integer."""


class NonDivisibleFactor(GridError):
    pass


class GridMismatch(GridError):
    pass


class NegativeState(DelayCIRError, ValueError):
    pass


class ControlError(DelayCIRError, ValueError):
    """Control constants not admissible for the model (c0 < lam, c2 < delta, ...)."""


class OutOfRange(DelayCIRError, ValueError):
    pass


class TooFewPaths(DelayCIRError, ValueError):
    pass


class BadBarrier(DelayCIRError, ValueError):
    pass


class ConfigError(DelayCIRError):
    """Problem with a run configuration file."""


class ConfigSyntaxError(ConfigError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownKey(ConfigError):
    def __init__(self, key, line=None):
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}unknown key {key!r}")


class ConstraintViolation(ConfigError):
    def __init__(self, key, rule):
        self.key = key
        self.rule = rule
        super().__init__(f"{key}: constraint violated ({rule})")
