"""Benchmark harness for mortgage default classifiers under extreme class
imbalance: schema-exact loan file parsing, customer-level stratified
sampling, minority oversampling, twelve from-scratch classifiers, and an
original-vs-resampled evaluation protocol with deterministic artifacts.
"""

from .errors import (
    CapabilityError,
    ConfigError,
    DataError,
    HoldoutLeakageError,
    LoanBenchError,
    ParseError,
    PartialFailure,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ConfigError",
    "DataError",
    "HoldoutLeakageError",
    "LoanBenchError",
    "ParseError",
    "PartialFailure",
    "__version__",
]
