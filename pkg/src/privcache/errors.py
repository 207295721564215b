"""Exception types raised across the package."""


class PrivCacheError(Exception):
    """Base class for every error raised by privcache."""


class InvalidParams(PrivCacheError, ValueError):
    pass


class OutOfRange(InvalidParams):
    """Cache memory outside the range a formula or scheme is defined on."""


class BelowThreshold(InvalidParams):
    """Memory below the regime where an optimality/gap statement applies."""


class ZeroInverse(PrivCacheError, ZeroDivisionError):
    pass


class TapeExhausted(PrivCacheError):
    pass


class MissingShare(PrivCacheError):
    pass


class PlacementMissing(PrivCacheError):
    pass


class MalformedTransmission(PrivCacheError):
    pass


class EnumerationTooLarge(PrivCacheError):
    pass


class NotADistribution(PrivCacheError, ValueError):
    pass
