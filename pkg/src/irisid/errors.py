"""Exception types shared across the pipeline."""


class IrisIdError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(IrisIdError):
    pass


class CalibrationError(IrisIdError):
    pass


class NoBoundaryError(IrisIdError):
    pass


class OutOfFrameError(IrisIdError):
    pass


class ShapeError(IrisIdError):
    pass


class LevelError(IrisIdError):
    pass


class TrainingDataError(IrisIdError):
    pass


class ModelMismatchError(IrisIdError):
    pass


class CodeLengthError(IrisIdError):
    pass


class WeightError(IrisIdError):
    pass


class EmptySampleError(IrisIdError):
    pass


class PinFormatError(IrisIdError):
    pass


class DuplicateSubjectError(IrisIdError):
    pass


class InsufficientEnrollmentError(IrisIdError):
    pass


class NotFoundError(IrisIdError):
    pass


class StoreError(IrisIdError):
    pass


class PeriodError(IrisIdError):
    pass


class WindowError(IrisIdError):
    pass
