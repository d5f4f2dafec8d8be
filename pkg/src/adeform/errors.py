"""Exception types shared across the package."""


class DomainError(ValueError):
    """Arguments outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at a pole (e.g. the gamma function at -n)."""


class SeriesCapError(RuntimeError):
    """A series hit its term cap before meeting the stopping rule.

    Carries the magnitude of the last computed term so callers can judge
    how far from convergence the sum was.
    """

    def __init__(self, msg, last_term):
        super().__init__(f"{msg} (last term magnitude {last_term:.3e})")
        self.last_term = last_term


class ConvergenceError(RuntimeError):
    """A quadrature or iteration failed to reach the requested tolerance."""


class SamplerError(RuntimeError):
    """Rejection sampling exceeded its attempt budget."""
