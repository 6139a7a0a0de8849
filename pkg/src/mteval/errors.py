"""Error taxonomy: configuration problems vs malformed input data.

The split matters to the command line, which exits 1 on ConfigError and 2
on DataError.  Both subclass ValueError so library callers can catch one
type.
"""


class ConfigError(ValueError):
    """Invalid run configuration (unknown metric, missing resource, ...)."""


class DataError(ValueError):
    """Malformed input file contents (bad row, dimension mismatch, ...)."""
