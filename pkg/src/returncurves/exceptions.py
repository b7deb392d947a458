class EstimationError(RuntimeError):
    """A curve or model could not be estimated from the data at hand."""


class ConvergenceWarning(UserWarning):
    """An optimiser stopped before meeting its tolerance; results are unreliable."""
