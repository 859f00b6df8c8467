from .base import (
    MAX_STEP_ROTATION_DEG,
    MAX_STEP_TRANSLATION,
    Mechanism,
    MotionCommand,
    StepInfo,
)
from .catalog import (
    AXIS_TAGS,
    GRASP_TASKS,
    MANIPULATION_TASKS,
    TASK_IDS,
    Catalog,
    CatalogError,
    HandStart,
    TaskDef,
    build_mechanism,
    default_catalog,
    load_catalog,
    task_catalog,
)
from .curved_rail import CurvedRailMechanism, CurvedRailState
from .grasp_task import GraspMechanism, GraspState
from .notch_rod import NotchRodMechanism, NotchRodState
from .rotary import GearMechanism, GearState, RotorMechanism, RotorState, ScrewMechanism, ScrewState

__all__ = [
    "MAX_STEP_ROTATION_DEG",
    "MAX_STEP_TRANSLATION",
    "Mechanism",
    "MotionCommand",
    "StepInfo",
    "AXIS_TAGS",
    "GRASP_TASKS",
    "MANIPULATION_TASKS",
    "TASK_IDS",
    "Catalog",
    "CatalogError",
    "HandStart",
    "TaskDef",
    "build_mechanism",
    "default_catalog",
    "load_catalog",
    "task_catalog",
    "CurvedRailMechanism",
    "CurvedRailState",
    "GraspMechanism",
    "GraspState",
    "NotchRodMechanism",
    "NotchRodState",
    "RotorMechanism",
    "RotorState",
    "GearMechanism",
    "GearState",
    "ScrewMechanism",
    "ScrewState",
]
