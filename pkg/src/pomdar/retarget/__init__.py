from .features import RetargetConfig, default_feature_pairs, feature_vectors
from .solver import RetargetError, RetargetResult, retarget
from .calibration import (
    CalibrationError,
    CalibrationParams,
    CalibrationPose,
    CalibrationResult,
    calibrate,
    load_calibration,
    make_synthetic_poses,
    save_calibration,
    standard_pose_set,
)
from .wrist import WristPassthrough, project_axis

__all__ = [
    "RetargetConfig",
    "default_feature_pairs",
    "feature_vectors",
    "RetargetError",
    "RetargetResult",
    "retarget",
    "CalibrationError",
    "CalibrationParams",
    "CalibrationPose",
    "CalibrationResult",
    "calibrate",
    "load_calibration",
    "save_calibration",
    "standard_pose_set",
    "make_synthetic_poses",
    "WristPassthrough",
    "project_axis",
]
