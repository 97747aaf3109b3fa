"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised when job or design parameters violate a precondition."""


class ProtocolError(RuntimeError):
    """Raised when the coded shuffle cannot proceed or decode.

    A correct plan never triggers this; seeing it means a bug or corrupted
    transmissions.
    """
