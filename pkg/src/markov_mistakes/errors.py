"""Exception hierarchy. The CLI maps each family to an exit code."""


class ConfigError(ValueError):
    """Invalid configuration or argument (exit code 1)."""


class AssumptionError(ValueError):
    """A source violates a theorem hypothesis that the caller required (exit code 2)."""


class NonErgodicError(AssumptionError):
    """The source has no unique stationary law, or is not ergodic where required."""


class NonReversibleError(AssumptionError):
    """Strict mode requires a reversible source."""


class NumericalError(ArithmeticError):
    """A linear-algebra result missed its tolerance (exit code 3)."""


class StateCapError(ConfigError):
    """Requested order would exceed the configured state cap."""


class EmptySubsequenceError(ValueError):
    """Frequency requested for a subsequence of length zero."""
