"""Vertical scaffold: an object pulled up a rod through angular notch gates.

The object may translate along the rod (z) and twist about it (phi). The
first unpassed notch blocks ascent beyond its window ceiling; passage
requires visiting both twist extremes (+a and -a) while the object sits
inside the notch height window. Leaving the window resets the partial
visit, so each passage is earned in a single engagement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import make_transform, rotation_about_axis
from .base import OK, REJECTED_CAP, Mechanism, MotionCommand, check_step_preconditions


@dataclass(frozen=True)
class NotchRodState:
    z: float  # object height along the rod, m
    twist_deg: float  # object twist about the rod axis
    passed: int
    visited_plus: bool  # current gate, within-window extreme visits
    visited_minus: bool


class NotchRodMechanism(Mechanism):
    def __init__(
        self,
        notches: list[tuple[float, float]],  # (height m, gate half-angle deg)
        rod_length: float = 0.15,
        eps_z: float = 0.005,
        center0: tuple[float, float, float] = (0.0, 0.0, 0.0),
    ):
        if not notches:
            raise ValueError("need at least one notch")
        heights = [z for z, _ in notches]
        angles = [a for _, a in notches]
        if sorted(heights) != heights or len(set(heights)) != len(heights):
            raise ValueError("notch heights must be strictly increasing")
        if sorted(angles) != angles or len(set(angles)) != len(angles):
            raise ValueError("gate half-angles must be strictly increasing")
        if any(a <= 0 for a in angles):
            raise ValueError("gate half-angles must be positive")
        self.notches = [(float(z), float(a)) for z, a in notches]
        self.rod_length = float(rod_length)
        self.eps_z = float(eps_z)
        self.center0 = np.asarray(center0, dtype=float)

    def initial_state(self) -> NotchRodState:
        return NotchRodState(z=0.0, twist_deg=0.0, passed=0,
                             visited_plus=False, visited_minus=False)

    def step(self, state: NotchRodState, command: MotionCommand, dt: float):
        check_step_preconditions(dt)
        if command.exceeds_cap():
            return state, REJECTED_CAP
        if not command.gripped:
            return state, OK

        dz = float(command.translation[2])
        dphi = float(np.degrees(command.rotation[2]))
        twist = state.twist_deg + dphi

        if state.passed < len(self.notches):
            gate_z, gate_a = self.notches[state.passed]
            ceiling = gate_z + self.eps_z
        else:
            gate_z, gate_a = None, None
            ceiling = self.rod_length
        z = float(np.clip(state.z + dz, 0.0, ceiling))

        passed = state.passed
        vplus, vminus = state.visited_plus, state.visited_minus
        if gate_z is not None:
            if abs(z - gate_z) <= self.eps_z:
                vplus = vplus or twist >= gate_a
                vminus = vminus or twist <= -gate_a
                if vplus and vminus:
                    passed += 1
                    vplus = vminus = False
            else:
                # disengaged from the gate window: start over next time
                vplus = vminus = False

        return NotchRodState(z=z, twist_deg=twist, passed=passed,
                             visited_plus=vplus, visited_minus=vminus), OK

    def progress(self, state: NotchRodState) -> float:
        return state.passed / len(self.notches)

    def object_pose(self, state: NotchRodState) -> np.ndarray:
        R = rotation_about_axis(np.array([0.0, 0.0, 1.0]), np.radians(state.twist_deg))
        return make_transform(R, self.center0 + np.array([0.0, 0.0, state.z]))

    def state_dict(self, state: NotchRodState) -> dict:
        return {
            "type": "notch_rod",
            "z": state.z,
            "twist": float(np.radians(state.twist_deg)),
            "passed": state.passed,
            "total": len(self.notches),
            "visited_plus": state.visited_plus,
            "visited_minus": state.visited_minus,
        }
