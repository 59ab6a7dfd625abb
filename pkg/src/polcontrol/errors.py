"""Exception types shared across the package."""


class PolControlError(Exception):
    """Base class for all domain errors raised by this package."""


class NonPositiveIntensity(PolControlError):
    """Total intensity of a Stokes vector is zero or negative."""


class NonUnitAxis(PolControlError):
    """Rotation axis is not a unit vector."""


class VoltageRangeExceeded(PolControlError):
    """A commanded electrode voltage falls outside the +/-70 V drive window."""


class Unsatisfiable(PolControlError):
    """No stage split keeps every electrode inside the drive window."""


class DegenerateDrive(PolControlError):
    """Commanded eigenmode lies in the stage's voltage-insensitive direction."""


class CalibrationFailed(PolControlError):
    """Calibration sweep produced no usable fit."""


class SingularCalibration(PolControlError):
    """Polarimeter calibration matrix is singular or too ill-conditioned."""


class CodeOutOfRange(PolControlError):
    """Converter code outside the representable range for the bit depth."""


class UnknownProfile(PolControlError):
    """Requested driver profile name is not configured."""


class ConfigInvalid(PolControlError):
    """Configuration file or run configuration failed validation."""
