"""Exception types shared across the package."""


class StalemixError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(StalemixError):
    """Invalid configuration or precondition at configuration level."""


class ScheduleError(ConfigError):
    """Malformed or out-of-range scripted schedule."""


class GenerationBudgetError(StalemixError):
    """Rejection sampling exhausted its attempt budget.

    Usually means the target margin is too close to the radius.
    """


class CertificationError(StalemixError):
    """A dataset is not separated by its stored witness."""


class InvariantViolation(StalemixError):
    """A runtime contract was breached (e.g. aggregation mass off by >1e-9)."""
