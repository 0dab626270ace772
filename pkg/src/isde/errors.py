"""Exception types shared across the package.

The CLI maps these onto exit codes: :class:`ParameterError` exits with 2,
:class:`DataError` and :class:`StructureError` exit with 3.
"""


class IsdeError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(IsdeError):
    """An argument is outside its documented range."""


class DataError(IsdeError):
    """Input data violates a range or format requirement."""


class StructureError(IsdeError):
    """A composite object (partition, table, model file) is malformed."""
