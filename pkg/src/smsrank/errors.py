"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line: 2 for bad
input (files, flags, shapes), 3 for numeric failures.
"""


class SMSError(Exception):
    exit_code = 2


class InputError(SMSError, ValueError):
    exit_code = 2


class NumericError(SMSError, ArithmeticError):
    exit_code = 3


# model database
class DuplicateId(InputError):
    pass


class FileUnreadable(InputError):
    pass


class CorruptManifest(InputError):
    pass


class UnknownCandidate(InputError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# parsing
class ParseError(InputError):
    pass


class EmptyFile(ParseError):
    pass


class NonFiniteValue(InputError):
    def __init__(self, row, col, where=""):
        self.row = row
        self.col = col
        loc = f"{where}: " if where else ""
        super().__init__(f"{loc}non-finite value at row {row}, column {col}")


class DimensionMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


# soft labels
class NonFiniteInput(InputError):
    pass


class NonPositiveTemperature(InputError):
    pass


class NotNormalized(InputError):
    pass


class InvalidDimension(InputError):
    pass


class InvalidRate(InputError):
    pass


class SingletonCluster(InputError):
    def __init__(self, class_id):
        self.class_id = class_id
        super().__init__(f"class {class_id!r} has fewer than 2 samples")


class TooFewSamples(InputError):
    pass


class DegenerateLabels(InputError):
    pass


# gaussian / separation
class TooFewPoints(InputError):
    pass


class NotPositiveDefinite(NumericError):
    pass


class SingleBin(NumericError):
    pass


class EmptyCandidateSet(InputError):
    pass


# baselines / evaluation
class SupportMismatch(InputError):
    pass


class InfiniteDivergence(NumericError):
    pass


class ZeroVariance(NumericError):
    pass


class DegenerateX(NumericError):
    pass


class MissingAccuracy(InputError, KeyError):
    def __init__(self, model_id):
        self.model_id = model_id
        super().__init__(f"no accuracy for model {model_id!r}")

    def __str__(self):
        return Exception.__str__(self)


class CandidateFailure(SMSError):
    """Wraps an error raised while processing one candidate."""

    def __init__(self, candidate_id, stage, cause):
        self.candidate_id = candidate_id
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
        super().__init__(f"candidate {candidate_id!r}, stage {stage}: {cause}")
