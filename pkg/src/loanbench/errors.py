"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
PartialFailure -> 3.
"""


class LoanBenchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LoanBenchError):
    """Invalid or inconsistent experiment configuration."""


class DataError(LoanBenchError):
    """Input data is missing, malformed, or violates a precondition."""


class ParseError(DataError):
    """A raw vintage file could not be parsed in strict mode."""


class CapabilityError(LoanBenchError):
    """A model was asked for an output it does not support (e.g. RS scores)."""


class HoldoutLeakageError(LoanBenchError):
    """An operation that must never see holdout data received some."""


class PartialFailure(LoanBenchError):
    """The run finished but one or more experiment cells failed."""
