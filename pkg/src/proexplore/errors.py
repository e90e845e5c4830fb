"""Exception types shared across modules."""


class ConfigError(ValueError):
    """Unknown selector or out-of-range configuration value."""


class SafetyViolation(RuntimeError):
    """The robot left the safe control space."""


class PlanningError(RuntimeError):
    """Internal inconsistency while building an exploration plan."""
