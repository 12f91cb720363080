"""Exception hierarchy shared by all vidshield modules."""


class VidShieldError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(VidShieldError):
    """Two frames/clips that must share dimensions do not."""


class ClipIOError(VidShieldError):
    """Loading or saving a frame sequence failed."""


class TooShortStreamError(VidShieldError):
    """A label stream is too short for the exception-index computation."""


class InvalidThresholdsError(VidShieldError):
    """Detection thresholds violate 0 <= gamma1 < gamma2 <= 1."""


class CalibrationError(VidShieldError):
    """Threshold calibration received degenerate input."""


class BlockError(VidShieldError):
    """A block spec or displacement is out of range for its frame."""


class CodecError(VidShieldError):
    """Transform/quantization input is malformed."""


class DefenseError(VidShieldError):
    """A defense operation received inconsistent inputs."""


class AllFramesMaskedError(DefenseError):
    """Temporal defense has no clean reference frame; route to spatial defense."""


class DenoiserContractError(DefenseError):
    """An external or custom denoiser violated the frame-in/frame-out contract."""


class ManifestError(VidShieldError):
    """A corpus manifest line is malformed or references missing data."""
