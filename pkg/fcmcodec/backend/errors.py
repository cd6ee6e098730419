from typing import Optional


class FcmError(Exception):
    """Root of every error raised by the codec.

    ``stage`` is filled by the pipeline with the name of the operation that failed.
    """

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def __str__(self):
        if self.stage:
            return f'[{self.stage}] {self.message}'
        return self.message


class StageError(FcmError):
    """Wraps a non-codec exception raised inside a pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f'{type(cause).__name__}: {cause}', stage=stage)
        self.cause = cause


class UsageError(FcmError):
    pass


class InvalidConfig(FcmError):
    pass


# tensor_core

class IoError(FcmError):
    pass


class FormatError(FcmError):
    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f'{message} (at byte offset {offset})'
        super().__init__(message)
        self.offset = offset


class ShapeError(FcmError):
    pass


# temporal

class MismatchError(FcmError):
    pass


# reduction

class GainLengthError(FcmError):
    pass


class UnknownGainIndex(FcmError):
    pass


class ReducerMismatchError(FcmError):
    pass


# inner codec

class DimensionMismatch(FcmError):
    pass


class SampleRangeError(FcmError):
    pass


class ExternalToolError(FcmError):
    pass


class CorruptPayload(FcmError):
    pass


# bitstream

class BitstreamError(FcmError):
    pass


class BadMagic(BitstreamError):
    pass


class UnsupportedVersion(BitstreamError):
    pass


class Truncated(BitstreamError):
    def __init__(self, message: str, offset: int):
        super().__init__(f'{message} (stream truncated at byte offset {offset})')
        self.offset = offset


class ConsistencyError(BitstreamError):
    pass


# eval

class InsufficientOverlap(FcmError):
    pass


class DegenerateFit(FcmError):
    pass


class NonPositiveTime(FcmError):
    pass


class ShapeMismatch(FcmError):
    pass
