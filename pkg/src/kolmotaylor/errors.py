"""Exception hierarchy. Every error raised by the library derives from KolmoError."""


class KolmoError(ValueError):
    pass


class DimensionMismatch(KolmoError):
    pass


class NonMonotoneLayers(KolmoError):
    pass


class NonzeroStarBlock(KolmoError):
    pass


class RankDeficientBlock(KolmoError):
    pass


class NonpositiveLambda(KolmoError):
    pass


class LevelOutOfRange(KolmoError):
    pass


class FieldIndexOutOfRange(KolmoError):
    pass


class UnsupportedDirection(KolmoError):
    pass


class UnsupportedIncrement(KolmoError):
    pass


class InsufficientSmoothness(KolmoError):
    pass


class UnsupportedGroup(KolmoError):
    pass


class OrderOutOfRange(KolmoError):
    pass


class AlphaOutOfRange(KolmoError):
    pass


class ConfigError(KolmoError):
    pass
