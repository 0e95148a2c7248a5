"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class SeeQuantError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(SeeQuantError, ValueError):
    """Malformed or inconsistent input (CLI exit code 2)."""


class ParseError(InvalidInputError):
    """A file could not be parsed; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class DecodeError(ParseError):
    """A SEEQ container failed validation."""


class RefusalError(SeeQuantError):
    """A configured size or depth cap would be exceeded (CLI exit code 3)."""
