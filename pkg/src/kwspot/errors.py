"""Exception hierarchy shared by every kwspot module.

Each class carries a short ``category`` string; the command line prints it so
scripts can branch on the failure kind without parsing prose.
"""


class KwsError(Exception):
    category = "error"


class DecodeError(KwsError):
    category = "decode"


class UnsupportedFormatError(KwsError):
    category = "unsupported-format"


class RateMismatchError(KwsError):
    category = "rate-mismatch"


class TooShortError(KwsError):
    category = "too-short"


class ConfigError(KwsError, ValueError):
    category = "config"


class DomainError(KwsError, ValueError):
    category = "domain"


class ShapeError(KwsError, ValueError):
    category = "shape"


class DegenerateInputError(KwsError, ValueError):
    category = "degenerate-input"


class InsufficientDataError(KwsError):
    category = "insufficient-data"


class TrainingDivergedError(KwsError):
    category = "diverged"


class CheckpointError(KwsError):
    category = "checkpoint"
