"""Exception types shared across the pipeline."""


class DataError(Exception):
    """Malformed or inconsistent input data (files, strokes, dimensions)."""


class NumericalError(Exception):
    """A numerical routine failed (singular system, non-finite energy)."""
