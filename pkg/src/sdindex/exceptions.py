"""Exception types raised by the sdindex package."""


class SDQueryError(Exception):
    """Base class for all sdindex errors."""


class InvalidWeightsError(SDQueryError, ValueError):
    """Weight parameters are outside the domain an operation supports."""


class NoIntersectionError(SDQueryError, ValueError):
    """A projection ray does not reach the requested vertical axis."""


class EmptyDatasetError(SDQueryError, ValueError):
    """An index build or query was attempted on an empty point set."""


class DuplicateIdError(SDQueryError, ValueError):
    """A point id is already present in the index."""


class UnknownIdError(SDQueryError, KeyError):
    """A point id is not present in the index."""


class WrongSlopeError(SDQueryError, ValueError):
    """Query weights do not match the slope an index was built for."""


class InvalidQueryError(SDQueryError, ValueError):
    """A query specification is malformed (arity, weights, or k)."""
