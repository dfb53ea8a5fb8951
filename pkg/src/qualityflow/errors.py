"""Shared exception types."""


class QualityFlowError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(QualityFlowError):
    """Invalid configuration or manifest."""


class BenchmarkRuleError(ConfigError):
    """A mode was requested that the benchmark's rules forbid."""
