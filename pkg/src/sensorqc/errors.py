"""Exception hierarchy shared by every module."""


class SensorQCError(Exception):
    """Base class for all errors raised by sensorqc."""


class InputError(SensorQCError):
    """Problems with the data being processed (CLI exit code 2)."""


class ConfigError(SensorQCError, ValueError):
    """Invalid hyper-parameters or configuration (CLI exit code 3)."""


class MalformedRow(InputError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyInput(InputError):
    pass


class OddSpan(InputError):
    """A duplicated-timestamp span has an odd number of points."""

    def __init__(self, start: int, length: int):
        super().__init__(f"duplicated span starting at index {start} has odd length {length}")
        self.start = start
        self.length = length


class LengthMismatch(InputError, ValueError):
    pass


class SeriesTooShort(InputError, ValueError):
    pass


class TooFewSamples(InputError, ValueError):
    pass


class ZeroVariance(InputError, ValueError):
    pass


class ConstantInput(InputError, ValueError):
    pass


class Undefined(InputError, ValueError):
    pass


class EmptyJoin(InputError):
    pass


class TooFewRows(InputError, ValueError):
    pass


class DimensionMismatch(InputError, ValueError):
    pass


class DegenerateCluster(InputError, ValueError):
    pass


class RateTooHigh(ConfigError):
    pass


class EmptyRegion(InputError, ValueError):
    pass


class EmptyEnsemble(ConfigError):
    pass


class NonpositiveWeights(ConfigError):
    pass
