"""Exception hierarchy.

Errors are grouped by what the CLI does with them: ``UsageError`` maps to
exit code 1, ``DataError`` to 2 and ``TrainingDiverged`` to 3.
"""


class NeuroIndexError(Exception):
    pass


class UsageError(NeuroIndexError):
    pass


class DataError(NeuroIndexError):
    pass


class InvalidConfig(UsageError):
    pass


class InvalidParams(UsageError):
    pass


class MissingRoot(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class DecodeError(DataError):
    def __init__(self, path, reason=""):
        self.path = path
        super().__init__(f"{path}: not valid UTF-8 text {reason}".rstrip())


class FormatError(DataError):
    pass


class UnknownToken(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class KeywordOutOfRange(DataError):
    pass


class EmptySamples(DataError):
    pass


class UnassignedLabels(DataError):
    pass


class EmptyQuery(UsageError):
    pass


class NonFiniteLoss(NeuroIndexError):
    pass


class TrainingDiverged(NeuroIndexError):
    pass
