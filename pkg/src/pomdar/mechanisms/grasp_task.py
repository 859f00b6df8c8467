"""Pure grasping task: lift the object past a height threshold, carry it
into the target region, release it there.

Phases move resting -> lifted -> dropped | relocated, never backward.
While held the object follows the commanded motion; a release inside the
target region relocates, and a loss of attachment that lasts longer than
the drop grace period anywhere else drops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import make_transform, matrix_to_quat, quat_to_matrix, rotvec_to_matrix
from ..grasp import Primitive
from .base import OK, REJECTED_CAP, Mechanism, MotionCommand, check_step_preconditions

PHASES = ("resting", "lifted", "dropped", "relocated")
PHASE_PROGRESS = {"resting": 0.0, "lifted": 0.5, "dropped": 0.5, "relocated": 1.0}


@dataclass(frozen=True)
class GraspState:
    position: tuple[float, float, float]
    quaternion: tuple[float, float, float, float]  # (w, x, y, z)
    phase: str
    lost_time: float  # continuous time without attachment while lifted, s
    clock: float


class GraspMechanism(Mechanism):
    def __init__(
        self,
        primitive: Primitive,
        start_position: tuple[float, float, float],
        lift_threshold: float,
        target_min: tuple[float, float, float],
        target_max: tuple[float, float, float],
        drop_grace: float = 0.1,
    ):
        self.primitive = primitive
        self.start_position = tuple(float(v) for v in start_position)
        self.lift_threshold = float(lift_threshold)
        self.target_min = np.asarray(target_min, dtype=float)
        self.target_max = np.asarray(target_max, dtype=float)
        if np.any(self.target_min >= self.target_max):
            raise ValueError("target region must have positive extent")
        self.drop_grace = float(drop_grace)

    def initial_state(self) -> GraspState:
        return GraspState(position=self.start_position,
                          quaternion=(1.0, 0.0, 0.0, 0.0),
                          phase="resting", lost_time=0.0, clock=0.0)

    def in_target(self, position) -> bool:
        p = np.asarray(position, dtype=float)
        return bool(np.all(p >= self.target_min) and np.all(p <= self.target_max))

    def step(self, state: GraspState, command: MotionCommand, dt: float):
        check_step_preconditions(dt)
        if command.exceeds_cap():
            return state, REJECTED_CAP

        clock = state.clock + dt
        pos = np.array(state.position)
        quat = np.array(state.quaternion)
        phase = state.phase
        lost = state.lost_time

        terminal = phase in ("dropped", "relocated")
        if command.gripped and not terminal:
            pos = pos + command.translation_array
            R = rotvec_to_matrix(command.rotation_array) @ quat_to_matrix(quat)
            quat = matrix_to_quat(R)
            lost = 0.0
        elif not command.gripped:
            lost = lost + dt

        if phase == "resting" and command.gripped and pos[2] > self.lift_threshold:
            phase = "lifted"
            lost = 0.0
        elif phase == "lifted" and not command.gripped:
            if self.in_target(pos):
                phase = "relocated"
            elif lost > self.drop_grace:
                phase = "dropped"

        return GraspState(position=(float(pos[0]), float(pos[1]), float(pos[2])),
                          quaternion=tuple(float(v) for v in quat),
                          phase=phase, lost_time=float(lost), clock=float(clock)), OK

    def progress(self, state: GraspState) -> float:
        return PHASE_PROGRESS[state.phase]

    def object_pose(self, state: GraspState) -> np.ndarray:
        return make_transform(quat_to_matrix(np.array(state.quaternion)),
                              np.array(state.position))

    def state_dict(self, state: GraspState) -> dict:
        return {
            "type": "grasp",
            "position": list(state.position),
            "quaternion": list(state.quaternion),
            "phase": state.phase,
            "in_target": self.in_target(state.position),
            "lift_threshold": self.lift_threshold,
        }
