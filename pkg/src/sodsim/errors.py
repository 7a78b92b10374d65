"""Shared exception types, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid or inconsistent input data / configuration (exit code 1)."""


class InfeasibleError(RuntimeError):
    """A requested plan or service setting cannot be satisfied (exit code 2)."""
