"""Shared exception types."""


class MtsgenError(Exception):
    """Base class for all package errors."""


class InputError(MtsgenError):
    """Bad user input: malformed files, invalid values, shape mismatches."""


class NumericalError(MtsgenError):
    """Numerical failure: degenerate data, optimizer blow-up."""


class ConfigError(InputError):
    """Invalid configuration."""
