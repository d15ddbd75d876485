"""Error categories with stable process exit codes."""


class ZeroGError(Exception):
    exit_code = 1


class ConfigError(ZeroGError):
    """Invalid or inconsistent experiment configuration."""
    exit_code = 2


class DataFormatError(ZeroGError):
    """Malformed dataset files, caches, or checkpoints."""
    exit_code = 3


class ProviderError(ZeroGError):
    """Embedding provider unreachable or returning bad output."""
    exit_code = 4


class NumericError(ZeroGError):
    """Non-finite values where finite ones are required."""
    exit_code = 5
