class DataError(ValueError):
    """Malformed, inconsistent or out-of-contract input data."""
