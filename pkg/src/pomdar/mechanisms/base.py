"""Shared machinery for the quasi-static task mechanisms.

Mechanism state is an immutable dataclass of plain floats so that replay
equality checks can be exact (bitwise). Commands arrive as small rigid
increments of the manipulated object; each mechanism projects the command
onto its own degrees of freedom and enforces its gating rules. Steps whose
displacement exceeds the quasi-static cap are rejected: the state is
returned unchanged with the rejection flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_STEP_TRANSLATION = 0.005  # m per step
MAX_STEP_ROTATION_DEG = 5.0  # deg per step


@dataclass(frozen=True)
class MotionCommand:
    """Small rigid displacement of the object: translation of the object
    center (m) and a rotation vector (radians). ``gripped`` tells the
    mechanism whether the hand currently holds its object."""

    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gripped: bool = True

    @classmethod
    def from_arrays(cls, translation, rotation, gripped=True) -> "MotionCommand":
        t = np.asarray(translation, dtype=float)
        r = np.asarray(rotation, dtype=float)
        return cls(translation=(float(t[0]), float(t[1]), float(t[2])),
                   rotation=(float(r[0]), float(r[1]), float(r[2])),
                   gripped=bool(gripped))

    @property
    def translation_array(self) -> np.ndarray:
        return np.array(self.translation)

    @property
    def rotation_array(self) -> np.ndarray:
        return np.array(self.rotation)

    def exceeds_cap(self) -> bool:
        too_far = float(np.linalg.norm(self.translation)) > MAX_STEP_TRANSLATION
        too_fast = np.degrees(float(np.linalg.norm(self.rotation))) > MAX_STEP_ROTATION_DEG
        return too_far or too_fast


@dataclass(frozen=True)
class StepInfo:
    rejected: bool = False
    reason: str = ""


OK = StepInfo()
REJECTED_CAP = StepInfo(rejected=True, reason="displacement exceeds quasi-static step cap")


def check_step_preconditions(dt: float) -> None:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")


class Mechanism:
    """Base interface; subclasses own the parameters, states are passed in."""

    def initial_state(self):
        raise NotImplementedError

    def step(self, state, command: MotionCommand, dt: float):
        raise NotImplementedError

    def progress(self, state) -> float:
        raise NotImplementedError

    def object_pose(self, state) -> np.ndarray:
        raise NotImplementedError

    def state_dict(self, state) -> dict:
        """Wire representation; angles in radians, lengths in meters."""
        raise NotImplementedError
