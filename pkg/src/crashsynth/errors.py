"""Exception types shared across the pipeline, mapped to CLI exit codes."""


class ConfigError(Exception):
    """Invalid or inconsistent run configuration (exit code 2)."""


class DataError(Exception):
    """Malformed, missing, or insufficient input data (exit code 3)."""


class NumericError(Exception):
    """Non-finite loss or other numeric failure during training (exit code 4)."""
