"""Exception hierarchy shared by all numerical modules."""


class FsAiryError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FsAiryError, ValueError):
    """Argument outside the documented domain of a function."""


class CapacityError(FsAiryError):
    """Requested size exceeds a configured table or dense-computation limit."""


class TruncationError(FsAiryError):
    """An infinite sum or integral could not be certified at the requested tolerance."""


class IllConditionedError(TruncationError):
    """Kernel branch whose truncation would need an unreasonable cutoff."""


class NearBoundaryError(FsAiryError):
    """Configuration too close to the boundary of the Weyl chamber."""


class NumericError(FsAiryError):
    """Non-finite intermediate values."""


class SamplerError(FsAiryError):
    """A sampler could not produce a valid draw (retry exhaustion, stalls)."""


class StatisticsError(FsAiryError):
    """Not enough effective samples to form the requested statistic."""


class ConfigError(FsAiryError, ValueError):
    """Invalid study configuration."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
