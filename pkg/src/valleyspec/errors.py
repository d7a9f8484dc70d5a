"""Exception types shared across modules."""


class HypothesisError(ValueError):
    """Input outside the range where the implemented statement applies."""


class DataError(ValueError):
    """Input data that cannot come from the assumed model (e.g. decreasing partial sums)."""


class SpectrumError(RuntimeError):
    """A spectrum that is unconverged or otherwise unusable for verification."""
