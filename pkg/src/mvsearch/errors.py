"""Exception types shared across the package."""


class MvsError(Exception):
    """Base class for all errors raised by this package."""


class ZeroVectorError(MvsError):
    """A vector with (near-)zero norm cannot be normalized."""


class DimensionMismatchError(MvsError):
    """Vector or view-set dimensionalities disagree."""


class EmptyViewSetError(MvsError):
    """A view set must contain at least one view."""


class EmptyMatrixError(MvsError):
    """A distance matrix must contain at least one entry."""


class UnknownStrategyError(MvsError):
    """Strategy name is not one of the supported fusion strategies."""


class DuplicateObjectIdError(MvsError):
    """Two objects in one database share an id."""


class DanglingReferenceError(MvsError):
    """Manifest and feature records do not match up."""


class EmptyDatabaseError(MvsError):
    """A database must contain at least one object."""


class FormatError(MvsError):
    """A binary file is corrupt or has an unexpected layout.

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class OutOfRangeError(MvsError):
    """Rank argument outside the valid 1..len range."""


class EmptyListError(MvsError):
    """A relevance list must be nonempty."""


class LengthMismatchError(MvsError):
    """Per-query result lists have inconsistent lengths."""


class MissingGroundTruthError(MvsError):
    """Evaluation requires every query to carry a category label."""


class InvalidConfigError(MvsError):
    """Generator configuration violates its constraints."""
