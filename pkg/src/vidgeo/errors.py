"""Exception hierarchy shared across the package."""


class VidgeoError(Exception):
    """Base class for all vidgeo errors."""


class InvalidArgumentError(VidgeoError, ValueError):
    """An argument violates a precondition (wrong shape, out of range, non-finite)."""


class DegenerateInputError(VidgeoError, ValueError):
    """Input is structurally valid but degenerate (e.g. zero vector, empty sequence)."""


class FormatError(VidgeoError, ValueError):
    """A file does not conform to its declared format.

    Carries the byte offset at which the problem was detected.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
