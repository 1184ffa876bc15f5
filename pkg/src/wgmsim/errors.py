class SolverGuardError(RuntimeError):
    """A physical-state guard tripped during integration (trace, positivity, leakage)."""


class ConfigError(ValueError):
    """Invalid run configuration; ``line`` is the 1-based offending line if known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
