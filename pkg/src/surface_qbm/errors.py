class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(ValueError):
    """Query outside the range covered by tabulated data."""


class QuadratureError(RuntimeError):
    """A quadrature did not reach its tolerance.

    ``estimate`` holds the achieved relative error estimate.
    """

    def __init__(self, message, estimate=float("nan")):
        super().__init__(f"{message} (achieved relative error ~{estimate:.3g})")
        self.estimate = estimate


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
