"""Exception types shared across the package."""


class DegenerateEvidenceError(ValueError):
    """Raised when an update receives an all-zero likelihood vector.

    The filter cannot renormalize; the caller owns the reset policy.
    """


class ConfigError(ValueError):
    """Invalid scenario configuration; message carries the field path."""


class PushStateError(RuntimeError):
    """A push was requested on a part that is not ready for one."""
