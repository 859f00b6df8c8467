"""Horizontal scaffold: an object carried along a rail whose sections
demand progressively larger in-hand rotation.

State is the arc position s and the object heading psi. The rail tangent
heading ramps linearly across each section from the previous section's
required rotation to this section's; a section boundary can only be
crossed while the object heading matches the tangent there, and cleared
boundaries latch (s never retreats past them). The chopsticks variant
additionally carries a stick-angle channel hard-clamped to its limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import make_transform, rotation_about_axis
from .base import OK, REJECTED_CAP, Mechanism, MotionCommand, check_step_preconditions


@dataclass(frozen=True)
class CurvedRailState:
    s: float  # arc position, m
    heading_deg: float  # object in-hand heading
    cleared: int
    stick_angle_deg: float = 0.0  # auxiliary constrained channel (chopsticks)


class CurvedRailMechanism(Mechanism):
    def __init__(
        self,
        sections: list[tuple[float, float]],  # (arc length m, required rotation deg)
        heading_tol_deg: float = 10.0,
        stick_limit_deg: float | None = None,
        center0: tuple[float, float, float] = (0.0, 0.0, 0.0),
    ):
        if not sections:
            raise ValueError("need at least one section")
        rotations = [r for _, r in sections]
        if sorted(rotations) != rotations or len(set(rotations)) != len(rotations):
            raise ValueError("required rotations must be strictly increasing")
        if any(length <= 0 for length, _ in sections):
            raise ValueError("section lengths must be positive")
        self.sections = [(float(length), float(rot)) for length, rot in sections]
        self.heading_tol_deg = float(heading_tol_deg)
        self.stick_limit_deg = None if stick_limit_deg is None else float(stick_limit_deg)
        self.center0 = np.asarray(center0, dtype=float)
        self.boundaries = np.cumsum([length for length, _ in self.sections])

    def initial_state(self) -> CurvedRailState:
        return CurvedRailState(s=0.0, heading_deg=0.0, cleared=0, stick_angle_deg=0.0)

    def tangent_heading_deg(self, s: float) -> float:
        """Rail tangent heading: 0 at the start, ramping to each section's
        required rotation at its end."""
        prev_rot = 0.0
        prev_b = 0.0
        for (length, rot), b in zip(self.sections, self.boundaries):
            if s <= b or b == self.boundaries[-1]:
                frac = np.clip((s - prev_b) / length, 0.0, 1.0)
                return prev_rot + frac * (rot - prev_rot)
            prev_rot, prev_b = rot, b
        return self.sections[-1][1]

    def step(self, state: CurvedRailState, command: MotionCommand, dt: float):
        check_step_preconditions(dt)
        if command.exceeds_cap():
            return state, REJECTED_CAP
        if not command.gripped:
            return state, OK

        heading = state.heading_deg + float(np.degrees(command.rotation[2]))

        stick = state.stick_angle_deg
        if self.stick_limit_deg is not None:
            stick = float(np.clip(stick + np.degrees(command.rotation[0]),
                                  -self.stick_limit_deg, self.stick_limit_deg))

        # advance along the local tangent direction
        h = np.radians(self.tangent_heading_deg(state.s))
        tangent = np.array([np.cos(h), np.sin(h), 0.0])
        ds = float(command.translation_array @ tangent)

        floor = 0.0 if state.cleared == 0 else float(self.boundaries[state.cleared - 1])
        cleared = state.cleared
        s_target = state.s + ds
        if cleared < len(self.sections):
            boundary = float(self.boundaries[cleared])
            if s_target >= boundary:
                required = self.sections[cleared][1]
                if abs(heading - required) <= self.heading_tol_deg:
                    cleared += 1
                    # cap cannot jump a whole section, so at most one crossing
                    if cleared < len(self.sections):
                        s = float(min(s_target, self.boundaries[cleared]))
                    else:
                        s = float(min(s_target, self.boundaries[-1]))
                else:
                    s = boundary  # pinned at the misaligned gate
            else:
                s = max(s_target, floor)
        else:
            s = float(np.clip(s_target, floor, self.boundaries[-1]))
        s = max(s, floor)

        return CurvedRailState(s=s, heading_deg=heading, cleared=cleared,
                               stick_angle_deg=stick), OK

    def progress(self, state: CurvedRailState) -> float:
        return state.cleared / len(self.sections)

    def object_pose(self, state: CurvedRailState) -> np.ndarray:
        R = rotation_about_axis(np.array([0.0, 0.0, 1.0]), np.radians(state.heading_deg))
        return make_transform(R, self.center0 + np.array([state.s, 0.0, 0.0]))

    def state_dict(self, state: CurvedRailState) -> dict:
        d = {
            "type": "curved_rail",
            "s": state.s,
            "heading": float(np.radians(state.heading_deg)),
            "cleared": state.cleared,
            "total": len(self.sections),
            "tangent_heading": float(np.radians(self.tangent_heading_deg(state.s))),
        }
        if self.stick_limit_deg is not None:
            d["stick_angle"] = float(np.radians(state.stick_angle_deg))
        return d
