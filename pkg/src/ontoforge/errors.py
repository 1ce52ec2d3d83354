"""Exception types shared across pipeline stages.

Exit-code mapping (see cli.main): DataError -> 2, InvariantError -> 3.
"""


class DataError(Exception):
    """Unusable input data: missing files, malformed formats, empty overlap."""


class InvariantError(Exception):
    """An internal consistency guarantee was violated; indicates a bug."""
