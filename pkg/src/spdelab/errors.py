"""Exception types shared across the package."""


class QuadratureError(RuntimeError):
    """A singular integral did not converge to the requested tolerance.

    Carries the indices of the offending modes (when applicable) so that
    failures are reported, never silently truncated.
    """

    def __init__(self, message, mode_indices=None):
        super().__init__(message)
        self.mode_indices = list(mode_indices) if mode_indices is not None else []


class FactorizationError(RuntimeError):
    """Covariance factorization failed even after the maximum jitter."""

    def __init__(self, message, condition_estimate=None, jitter=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate
        self.jitter = jitter


class ScenarioError(ValueError):
    """A scenario file failed validation.  ``field`` holds the JSON path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
