"""Exception types shared by the loaders and the CLI."""

from __future__ import annotations


class InputFormatError(ValueError):
    """An input file could not be read as the documented format.

    ``location`` is a human-readable pointer into the file (a line number
    for line-oriented files, a JSON path for structured ones).
    """

    def __init__(self, message: str, location: str | None = None, path: str | None = None):
        self.location = location
        self.path = path
        parts = []
        if path:
            parts.append(str(path))
        if location:
            parts.append(location)
        prefix = ":".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ParseError(InputFormatError):
    """Malformed syntax."""


class IntegrityError(InputFormatError):
    """Well-formed syntax but an id reference or invariant does not hold."""


class UnknownIdError(KeyError):
    """A query referenced an id that is not in the model."""

    def __str__(self) -> str:
        return f"unknown id: {self.args[0]!r}"
