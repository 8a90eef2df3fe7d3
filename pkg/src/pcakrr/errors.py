class NumericalError(RuntimeError):
    """A factorization or decomposition failed beyond the jitter fallback."""


class ConfigError(ValueError):
    """Invalid run configuration (unknown keys, bad values)."""
