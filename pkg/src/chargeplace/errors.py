class DataError(ValueError):
    """Input data is malformed or cannot support the requested computation."""
