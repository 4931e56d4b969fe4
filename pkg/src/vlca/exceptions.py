"""Exception types raised by the public API.

Everything inherits from :class:`VlcaError` so callers can catch the whole
family with one clause; each class additionally inherits the closest builtin
category (``ValueError``, ``LookupError``, ...) so untyped callers still get
sensible behaviour.
"""

from __future__ import annotations


class VlcaError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(VlcaError, ValueError):
    """An array or record does not have the expected shape or field count."""


class MalformedNumberError(VlcaError, ValueError):
    """A text field that should parse as a float does not."""


class MalformedRecordError(VlcaError, ValueError):
    """A data line is structurally invalid (bad kind tag, missing fields)."""


class DuplicateTokenError(VlcaError, ValueError):
    """The same token appears twice in an embedding stream."""


class TokenNotFoundError(VlcaError, LookupError):
    """A requested token is absent from the embedding table."""


class BadHeaderError(VlcaError, ValueError):
    """The first line of a prompt table does not match the expected header."""


class DuplicateNameError(VlcaError, ValueError):
    """A style or semantic name appears twice in a prompt table."""


class ZeroVectorError(VlcaError, ValueError):
    """A vector that must be nonzero has zero norm."""


class LabelOutOfRangeError(VlcaError, IndexError):
    """A class label falls outside ``[0, num_classes)``."""


class NameNotFoundError(VlcaError, LookupError):
    """A class or domain name has no entry among the prompt embeddings."""


class ConvergenceFailureError(VlcaError, RuntimeError):
    """The underlying SVD routine failed to converge."""


class NonFiniteLossError(VlcaError, FloatingPointError):
    """A loss evaluated to NaN or infinity."""


class EmptyDatasetError(VlcaError, ValueError):
    """An operation that needs at least one sample received none."""


class ConfigError(VlcaError, ValueError):
    """A configuration file contains an unknown key or a bad value."""
