"""Continuous-rotation mechanisms: ratchet-clutch rotor, geared fidget
element, and the kinematically coupled screw."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import make_transform, rotation_about_axis
from .base import OK, REJECTED_CAP, Mechanism, MotionCommand, check_step_preconditions


def _mount_rotation(axis: np.ndarray) -> np.ndarray:
    """Rotation taking local +z onto the mechanism axis (for primitives
    modeled with a local-z symmetry axis)."""
    z = np.array([0.0, 0.0, 1.0])
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    v = np.cross(z, axis)
    s = np.linalg.norm(v)
    c = float(z @ axis)
    if s < 1e-12:
        return np.eye(3) if c > 0 else rotation_about_axis(np.array([1.0, 0, 0]), np.pi)
    return rotation_about_axis(v / s, float(np.arctan2(s, c)))


@dataclass(frozen=True)
class RotorState:
    theta_deg: float  # rotor angle
    accumulated_deg: float  # forward-direction driven rotation, never decreases
    clutch_engaged: bool


class RotorMechanism(Mechanism):
    """Gravity-clutch rotor: forward gripped rotation drives the rotor and
    accumulates; reverse gripped rotation freewheels; released, the clutch
    holds the rotor where it is."""

    def __init__(self, ratchet_direction: int = 1, axis=(0.0, 1.0, 0.0),
                 center: tuple[float, float, float] = (0.0, 0.0, 0.0)):
        if ratchet_direction not in (1, -1):
            raise ValueError("ratchet_direction must be +1 or -1")
        self.ratchet_direction = int(ratchet_direction)
        self.axis = np.asarray(axis, dtype=float)
        self.axis = self.axis / np.linalg.norm(self.axis)
        self.center = np.asarray(center, dtype=float)
        self._mount = _mount_rotation(self.axis)

    def initial_state(self) -> RotorState:
        return RotorState(theta_deg=0.0, accumulated_deg=0.0, clutch_engaged=False)

    def step(self, state: RotorState, command: MotionCommand, dt: float):
        check_step_preconditions(dt)
        if command.exceeds_cap():
            return state, REJECTED_CAP
        if not command.gripped:
            return RotorState(state.theta_deg, state.accumulated_deg, False), OK
        d = float(np.degrees(command.rotation_array @ self.axis))
        drive = d * self.ratchet_direction
        if drive > 0:
            return RotorState(theta_deg=state.theta_deg + d,
                              accumulated_deg=state.accumulated_deg + drive,
                              clutch_engaged=True), OK
        return RotorState(state.theta_deg, state.accumulated_deg, False), OK

    def progress(self, state: RotorState) -> float:
        return min(state.accumulated_deg / 360.0, 1.0)

    def object_pose(self, state: RotorState) -> np.ndarray:
        spin = rotation_about_axis(self.axis, np.radians(state.theta_deg))
        return make_transform(spin @ self._mount, self.center)

    def state_dict(self, state: RotorState) -> dict:
        return {
            "type": "rotor",
            "theta": float(np.radians(state.theta_deg)),
            "accumulated": float(np.radians(state.accumulated_deg)),
            "clutch_engaged": state.clutch_engaged,
        }


@dataclass(frozen=True)
class GearState:
    input_deg: float  # alpha; output beta = ratio * alpha exactly
    max_output_excursion_deg: float  # progress latch


class GearMechanism(Mechanism):
    """Free-spinning input wheel with an exactly enforced gear coupling to
    the scored output element."""

    def __init__(self, ratio: float = 3.0, axis=(0.0, 1.0, 0.0),
                 center: tuple[float, float, float] = (0.0, 0.0, 0.0)):
        if ratio <= 0:
            raise ValueError("gear ratio must be positive")
        self.ratio = float(ratio)
        self.axis = np.asarray(axis, dtype=float)
        self.axis = self.axis / np.linalg.norm(self.axis)
        self.center = np.asarray(center, dtype=float)
        self._mount = _mount_rotation(self.axis)

    def output_deg(self, state: GearState) -> float:
        return self.ratio * state.input_deg

    def initial_state(self) -> GearState:
        return GearState(input_deg=0.0, max_output_excursion_deg=0.0)

    def step(self, state: GearState, command: MotionCommand, dt: float):
        check_step_preconditions(dt)
        if command.exceeds_cap():
            return state, REJECTED_CAP
        if not command.gripped:
            return state, OK
        d = float(np.degrees(command.rotation_array @ self.axis))
        alpha = state.input_deg + d
        excursion = max(state.max_output_excursion_deg, abs(self.ratio * alpha))
        return GearState(input_deg=alpha, max_output_excursion_deg=excursion), OK

    def progress(self, state: GearState) -> float:
        return min(state.max_output_excursion_deg / 360.0, 1.0)

    def object_pose(self, state: GearState) -> np.ndarray:
        spin = rotation_about_axis(self.axis, np.radians(state.input_deg))
        return make_transform(spin @ self._mount, self.center)

    def state_dict(self, state: GearState) -> dict:
        return {
            "type": "gear",
            "input": float(np.radians(state.input_deg)),
            "output": float(np.radians(self.output_deg(state))),
            "ratio": self.ratio,
        }


@dataclass(frozen=True)
class ScrewState:
    theta_deg: float  # unscrew angle, >= 0 (seated at 0)
    removed: bool
    max_travel: float  # progress latch, m


class ScrewMechanism(Mechanism):
    """Exact kinematic thread coupling: x = theta/360 * pitch. Removal
    latches once the translation reaches the travel."""

    def __init__(self, pitch: float = 0.002, travel: float = 0.008,
                 unscrew_direction: int = 1, axis=(0.0, 0.0, 1.0),
                 center: tuple[float, float, float] = (0.0, 0.0, 0.0)):
        if pitch <= 0 or travel <= 0:
            raise ValueError("pitch and travel must be positive")
        if unscrew_direction not in (1, -1):
            raise ValueError("unscrew_direction must be +1 or -1")
        self.pitch = float(pitch)
        self.travel = float(travel)
        self.unscrew_direction = int(unscrew_direction)
        self.axis = np.asarray(axis, dtype=float)
        self.axis = self.axis / np.linalg.norm(self.axis)
        self.center = np.asarray(center, dtype=float)
        self._mount = _mount_rotation(self.axis)

    def translation(self, state: ScrewState) -> float:
        return state.theta_deg / 360.0 * self.pitch

    def initial_state(self) -> ScrewState:
        return ScrewState(theta_deg=0.0, removed=False, max_travel=0.0)

    def step(self, state: ScrewState, command: MotionCommand, dt: float):
        check_step_preconditions(dt)
        if command.exceeds_cap():
            return state, REJECTED_CAP
        if not command.gripped or state.removed:
            return state, OK
        d = float(np.degrees(command.rotation_array @ self.axis)) * self.unscrew_direction
        theta = max(0.0, state.theta_deg + d)
        x = theta / 360.0 * self.pitch
        return ScrewState(theta_deg=theta, removed=x >= self.travel,
                          max_travel=max(state.max_travel, x)), OK

    def progress(self, state: ScrewState) -> float:
        return min(state.max_travel / self.travel, 1.0)

    def object_pose(self, state: ScrewState) -> np.ndarray:
        spin = rotation_about_axis(self.axis, np.radians(state.theta_deg)
                                   * self.unscrew_direction)
        return make_transform(spin @ self._mount,
                              self.center + self.axis * self.translation(state))

    def state_dict(self, state: ScrewState) -> dict:
        return {
            "type": "screw",
            "theta": float(np.radians(state.theta_deg)),
            "x": self.translation(state),
            "travel": self.travel,
            "removed": state.removed,
        }
