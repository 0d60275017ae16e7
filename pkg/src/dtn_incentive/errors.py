"""Exception hierarchy shared by every module."""


class DTNIncentiveError(Exception):
    """Base class for all package errors."""


class ValidationError(DTNIncentiveError, ValueError):
    pass


class DuplicateId(ValidationError):
    pass


class NonPositiveRate(ValidationError):
    pass


class NonFiniteMoment(ValidationError):
    pass


class UnknownRelay(ValidationError, KeyError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class IncompleteLog(ValidationError):
    pass


class DegenerateTime(ValidationError):
    pass


class TooManyRelays(ValidationError):
    pass


class ZeroSuccessProbability(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class EmptyTrace(ValidationError):
    pass


class UnsortedInput(ValidationError):
    pass


class ConfigError(ValidationError):
    pass
