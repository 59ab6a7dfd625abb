"""Software twin of a polarization visualization, switching, and
stabilization unit: a simulated electro-optic plant (fiber channel,
multi-stage retarder cell, high-voltage drivers, polarimeter) closed around
a deterministic digital controller."""

from .core import (
    CARDINAL_STATES,
    LinearRetarder,
    NormalizedSop,
    Rotation,
    StokesVector,
    misalignment,
    normalize,
    solve_retarder,
    sop,
)
from .driver import (
    PROFILES,
    DriverProfile,
    DriverState,
    get_profile,
    max_switch_rate,
    transition_time,
)
from .errors import (
    CalibrationFailed,
    CodeOutOfRange,
    ConfigInvalid,
    DegenerateDrive,
    NonPositiveIntensity,
    NonUnitAxis,
    PolControlError,
    SingularCalibration,
    UnknownProfile,
    Unsatisfiable,
    VoltageRangeExceeded,
)
from .loop import (
    Event,
    LoopConfig,
    LoopFrame,
    PolarizationLoop,
    RunSummary,
    estimate_channel,
    encode_inverse,
    run,
)
from .pcm import (
    DEFAULT_CALIBRATION,
    CalibrationParams,
    PcmStagePlant,
    StageVoltages,
    SweepConfig,
    calibrate_stage,
    noisy_measure,
    retarder_to_voltages,
    split_stages,
)
from .polarimeter import (
    PipelineConfig,
    PipelineResult,
    ScreenConfig,
    isometric_project,
    pipeline,
    to_pixels,
)

__version__ = "1.0.0"

__all__ = [
    "CARDINAL_STATES",
    "CalibrationFailed",
    "CalibrationParams",
    "CodeOutOfRange",
    "ConfigInvalid",
    "DEFAULT_CALIBRATION",
    "DegenerateDrive",
    "DriverProfile",
    "DriverState",
    "Event",
    "LinearRetarder",
    "LoopConfig",
    "LoopFrame",
    "NonPositiveIntensity",
    "NonUnitAxis",
    "NormalizedSop",
    "PROFILES",
    "PcmStagePlant",
    "PipelineConfig",
    "PipelineResult",
    "PolControlError",
    "PolarizationLoop",
    "Rotation",
    "RunSummary",
    "SingularCalibration",
    "ScreenConfig",
    "StageVoltages",
    "SweepConfig",
    "StokesVector",
    "UnknownProfile",
    "Unsatisfiable",
    "VoltageRangeExceeded",
    "calibrate_stage",
    "encode_inverse",
    "estimate_channel",
    "get_profile",
    "isometric_project",
    "max_switch_rate",
    "misalignment",
    "noisy_measure",
    "normalize",
    "pipeline",
    "retarder_to_voltages",
    "run",
    "solve_retarder",
    "sop",
    "split_stages",
    "to_pixels",
    "transition_time",
    "__version__",
]
