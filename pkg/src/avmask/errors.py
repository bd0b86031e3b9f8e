"""Exception hierarchy shared by every avmask module."""


class AvmaskError(Exception):
    """Base class for all errors raised by avmask."""


class ShapeError(AvmaskError, ValueError):
    pass


class InputTooShort(AvmaskError, ValueError):
    pass


class EmptyWindow(AvmaskError, ValueError):
    pass


class BadThreshold(AvmaskError, ValueError):
    pass


class BadProbability(AvmaskError, ValueError):
    pass


class ConfigError(AvmaskError, ValueError):
    pass


class ModalityError(AvmaskError, ValueError):
    pass


class DegenerateSignal(AvmaskError, ValueError):
    pass


class DownsampleUnsupported(AvmaskError, ValueError):
    pass


class AlignmentError(AvmaskError, ValueError):
    pass


class EmptyDataset(AvmaskError, ValueError):
    pass


class UndefinedRate(AvmaskError, ValueError):
    pass


class UnsupportedWav(AvmaskError, IOError):
    pass


class BadVideoFile(AvmaskError, IOError):
    pass


class BadCheckpoint(AvmaskError, IOError):
    pass


class BadMaskFile(AvmaskError, IOError):
    pass
