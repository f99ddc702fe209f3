"""Exception hierarchy.

The CLI maps ``InkError`` to exit code 2 (data error) and ``BackendError``
to exit code 3; usage problems exit 1.
"""


class InkError(Exception):
    """Base class for data and validation errors."""


class EmptyInkError(InkError):
    """An operation that needs at least one point received an empty ink."""


class InkmlError(InkError):
    """InkML parse or serialization failure."""


class TokenError(InkError):
    """Token encoding/decoding failure or malformed token text."""


class ValidationError(InkError):
    """A value is outside its documented range or schema."""


class BackendError(InkError):
    """A derendering backend failed."""
