"""Exception types mapped to CLI exit codes (config=2, data=3, numerical=4)."""


class ConfigError(Exception):
    """Bad configuration value or inconsistent run parameters."""


class DataError(Exception):
    """Unreadable, malformed, or dimensionally inconsistent input data."""


class ParseError(DataError):
    """A file could not be parsed; message names the offending line/offset."""


class NumericalError(Exception):
    """A numerical routine failed (singular matrix, non-finite values)."""
