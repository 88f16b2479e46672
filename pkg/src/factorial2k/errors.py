"""Exception types shared across the package.

Plain ``ValueError`` is used for ordinary argument validation; the
subclasses below exist where callers (notably the CLI) need to tell
failure categories apart.
"""


class UnsupportedRepresentationError(ValueError):
    """A representation exists mathematically but is not materializable here.

    Raised e.g. when a cell-count vector is requested for a design whose
    2^(2^K) cells would be impractically many.
    """


class ResourceLimitError(RuntimeError):
    """A combinatorial or memory bound would be exceeded."""


class CaseFileError(ValueError):
    """A simulation-case file failed to parse; message carries the row number."""
