class PerfectSamplingError(Exception):
    pass


class InvalidInputError(PerfectSamplingError, ValueError):
    """Bad state or innovation encoding, dimension mismatch, bad parameter."""

    pass


class ImputationError(PerfectSamplingError):
    """The requested transition has zero probability under the forward rule."""

    pass


class UnsupportedModelError(PerfectSamplingError):
    pass


class ModelError(PerfectSamplingError):
    """Stationary law is not unique (reducible or periodic chain)."""

    pass


class DegenerateStateError(PerfectSamplingError):
    pass


class ResourceBudgetError(PerfectSamplingError):
    pass


class WindowTimeout(PerfectSamplingError):
    """
    Raised when a sampler exceeds its max_window. The run is discarded: a
    CFTP run cut short would bias the output, an FMMR run can simply be
    retried with fresh randomness.
    """

    def __init__(self, algorithm: str, max_window: int):
        super().__init__(f"{algorithm} exceeded max_window={max_window}")
        self.algorithm = algorithm
        self.max_window = max_window

    def __reduce__(self):
        return (WindowTimeout, (self.algorithm, self.max_window))


class InconclusiveError(PerfectSamplingError):
    pass


class InsufficientSamplesError(PerfectSamplingError):
    pass
