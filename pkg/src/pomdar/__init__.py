"""Throughput-based dexterity benchmark engine.

A deterministic quasi-static simulator of the benchmark's scaffolded task
mechanisms, a kinematic anthropomorphic hand with lockable degrees of
freedom, throughput scoring, optimization-based keypoint retargeting,
motion analysis, and a live session service.
"""

from .hand import Embodiment, HandModel, HandPose, JointSpec, apply_embodiment, default_model
from .mechanisms import MotionCommand, TaskDef, default_catalog, task_catalog
from .retarget import CalibrationParams, RetargetConfig, calibrate, retarget
from .scoring import (
    BaselineTable,
    BenchmarkReport,
    TaskScore,
    TrialRecord,
    aggregate,
    speed_score,
    task_score,
)

__version__ = "0.1.0"

__all__ = [
    "Embodiment",
    "HandModel",
    "HandPose",
    "JointSpec",
    "apply_embodiment",
    "default_model",
    "MotionCommand",
    "TaskDef",
    "default_catalog",
    "task_catalog",
    "CalibrationParams",
    "RetargetConfig",
    "calibrate",
    "retarget",
    "BaselineTable",
    "BenchmarkReport",
    "TaskScore",
    "TrialRecord",
    "aggregate",
    "speed_score",
    "task_score",
    "__version__",
]
