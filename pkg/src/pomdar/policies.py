"""Scripted trial policies for every catalog task.

Each policy drives a private session closed-loop: it reads the live
mechanism state, plans fingertip targets (pinch twists, release-regrip
gaiting, carries), solves the small tip-tracking IK restricted to the
active embodiment, and emits the resulting joint-target input frames.
The emitted rows are a complete session log (create, start_trial,
input..., finalize) that `simulate` and `replay` re-run tick for tick,
so CI exercises the full pipeline without a human operator.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares

from .geometry import rotation_about_axis
from .hand import HandPose, keypoint_index
from .mechanisms import TaskDef
from .service.protocol import PROTOCOL_VERSION
from .service.session import SessionManager

CONTROL_DT = 0.05  # one input frame per control step
MAX_TRIAL_TIME = 150.0


class ScriptedPolicy:
    """Generates the input log for one (task, embodiment) trial."""

    def __init__(self, task_id: str, embodiment_id: str, seed: int = 0,
                 manager: SessionManager | None = None):
        self.manager = manager or SessionManager()
        self.task_id = task_id
        self.embodiment_id = embodiment_id
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.session = self.manager.create(
            task_id, embodiment_id,
            overrides={"manual_tick": True, "source": "scripted"},
        )
        self.task: TaskDef = self.session.task
        self.model = self.session.model
        self.free = ~self.session.embodiment.lock_mask
        self.rows: list[dict] = []
        self.seq = 0
        self.k = 0  # control step counter
        self.wrist_offset = np.eye(4)
        self._tip_idx = {name: keypoint_index(name) for name in ("thumb_tip", "index_tip")}
        # per-trial operator variation: amplitude scale and grip placement
        self.jitter = float(np.clip(1.0 + 0.05 * self.rng.standard_normal(), 0.85, 1.15))
        self.grip_noise = self.rng.normal(0.0, 0.0004, 3)

    # ------------------------------------------------------------------
    # Low-level helpers
    # ------------------------------------------------------------------

    @property
    def now(self) -> float:
        return self.k * CONTROL_DT

    def _object_pose(self) -> np.ndarray:
        return self.session.mechanism.object_pose(self.session.mech_state)

    def _grip_points(self, pose: np.ndarray | None = None, slack: float = 0.0):
        """Pinch points on the object surface, world frame.

        Spheres, cylinders, and disks are grip-symmetric about their axis,
        so the straddle uses the fixed world direction (regripping after a
        twist lands on an equivalent surface point); boxes keep material
        points.
        """
        pose = self._object_pose() if pose is None else pose
        if self.task.object.shape == "box":
            axis_w = pose[:3, :3] @ self.task.grip_axis
            r = self.task.object.half_extents[1]
        else:
            axis_w = self.task.grip_axis
            r = self.task.object.radius
        c = pose[:3, 3] + self.grip_noise
        if self.task.id in ("G1",):
            c[2] += 0.02  # grip tall cylinders above their middle
        off = (r + slack) * axis_w * self.task.thumb_side
        return {"thumb_tip": c + off, "index_tip": c - off}

    def _solve_tips(self, targets: dict[str, np.ndarray]) -> np.ndarray:
        """Tip-tracking IK over the embodiment's free joints."""
        q0 = self.session.q.copy()
        free = self.free
        wrist = self.wrist_offset @ self.task.hand_start.wrist

        def resid(x):
            q = q0.copy()
            q[free] = x
            kp = self.model.forward_kinematics(HandPose(q=q, wrist=wrist))
            errs = [kp[self._tip_idx[name]] - tgt for name, tgt in targets.items()]
            return np.concatenate([np.concatenate(errs) * 100.0, 0.02 * (x - q0[free])])

        sol = least_squares(resid, q0[free], bounds=(self.model.lower[free],
                                                     self.model.upper[free]),
                            xtol=1e-10, ftol=1e-10, max_nfev=40)
        q = q0.copy()
        q[free] = sol.x
        return q

    def _emit(self, q: np.ndarray | None = None,
              wrist_offset: np.ndarray | None = None) -> None:
        """Send one input frame and advance the session one control step."""
        if wrist_offset is not None:
            self.wrist_offset = wrist_offset
        self.seq += 1
        self.k += 1
        row = {
            "type": "input",
            "protocol_version": PROTOCOL_VERSION,
            "seq": self.seq,
            "t": self.now,
            "joints": [float(v) for v in (q if q is not None else self.session.q)],
            "wrist": {
                "position": [float(v) for v in self.wrist_offset[:3, 3]],
                "quaternion": [float(v) for v in _quat(self.wrist_offset)],
            },
        }
        self.rows.append(row)
        from .service.protocol import parse_input_frame

        dt = self.session.config.tick_period
        n = int(round(CONTROL_DT / dt))
        base = (self.k - 1) * CONTROL_DT
        self.session.submit_frame(parse_input_frame(row))
        for i in range(1, n + 1):
            self.session.tick(base + i * dt)

    def _settle(self, steps: int = 2) -> None:
        for _ in range(steps):
            self._emit()

    # ------------------------------------------------------------------
    # Maneuvers
    # ------------------------------------------------------------------

    def _tips_now(self) -> dict[str, np.ndarray]:
        kp = self.model.forward_kinematics(
            HandPose(q=self.session.q,
                     wrist=self.wrist_offset @ self.task.hand_start.wrist))
        return {name: kp[idx].copy() for name, idx in self._tip_idx.items()}

    def _twist_step(self, axis: np.ndarray, step_deg: float) -> None:
        """One in-hand swivel increment of the pinch pair about an axis
        through the object center."""
        c = self._object_pose()[:3, 3]
        R = rotation_about_axis(np.asarray(axis, float), np.radians(step_deg))
        targets = {name: c + R @ (p - c) for name, p in self._tips_now().items()}
        self._emit(q=self._solve_tips(targets))

    def _twist_until(self, axis, predicate, direction: float, step_deg: float = 2.5,
                     wiggle_budget_deg: float = 22.0, max_cycles: int = 10) -> bool:
        """Closed-loop twist toward ``predicate``, gaiting with
        release-regrip whenever the wiggle amplitude is spent. Returns
        True when the predicate was met."""
        step_deg = step_deg * self.jitter
        wiggle_budget_deg = wiggle_budget_deg * self.jitter
        for _ in range(max_cycles):
            wiggled = 0.0
            stalled = 0
            while wiggled < wiggle_budget_deg:
                if predicate() or self.now > MAX_TRIAL_TIME - 5:
                    return predicate()
                before = self._mech_angle(axis)
                self._twist_step(axis, direction * step_deg)
                wiggled += step_deg
                moved = abs(self._mech_angle(axis) - before)
                stalled = stalled + 1 if moved < 0.2 * step_deg else 0
                if stalled >= 3:
                    break  # transfer has died; regrip
            if predicate():
                return True
            self._release()
            self._regrip()
        return predicate()

    def _mech_angle(self, axis) -> float:
        """The mechanism's twist-like coordinate, for stall detection."""
        state = self.session.mech_state
        for attr in ("twist_deg", "heading_deg", "accumulated_deg", "theta_deg", "input_deg"):
            if hasattr(state, attr):
                return float(getattr(state, attr))
        return 0.0

    def _move_wrist(self, delta: np.ndarray, step: float = 0.002) -> None:
        """Translate the wrist in capped increments."""
        delta = np.asarray(delta, float)
        dist = float(np.linalg.norm(delta))
        if dist < 1e-12:
            return
        n_steps = max(1, int(np.ceil(dist / step)))
        d = delta / n_steps
        for _ in range(n_steps):
            off = self.wrist_offset.copy()
            off[:3, 3] = off[:3, 3] + d
            self._emit(wrist_offset=off)

    def _release(self, amount: float = 0.014) -> None:
        """Open the pinch radially to break attachment."""
        pose = self._object_pose()
        targets = self._grip_points(pose, slack=amount)
        self._emit(q=self._solve_tips(targets))
        self._settle(3)  # let the drop grace elapse where relevant

    def _regrip(self) -> None:
        targets = self._grip_points()
        self._emit(q=self._solve_tips(targets))
        self._settle(1)

    # ------------------------------------------------------------------
    # Task programs
    # ------------------------------------------------------------------

    def _raise_until_pinned(self, target_z: float) -> None:
        for _ in range(200):
            state = self.session.mech_state
            if state.z >= target_z - 0.001:
                return
            z0 = state.z
            self._move_wrist([0, 0, 0.002])
            if self.session.mech_state.z - z0 < 0.0015:
                return  # pinned at a gate ceiling

    def _run_notch_rod(self) -> None:
        mech = self.session.mechanism
        up = [0.0, 0.0, 1.0]
        for gate_z, gate_a in mech.notches:
            passed0 = self.session.mech_state.passed
            self._raise_until_pinned(gate_z)
            gate_done = lambda: self.session.mech_state.passed > passed0  # noqa: E731
            self._twist_until(
                up, lambda: self.session.mech_state.visited_plus or gate_done(), +1.0)
            if not self._twist_until(up, gate_done, -1.0):
                break  # this gate is beyond the embodiment; stop here
            # recentre the object twist so the next gate starts near zero
            sign = -1.0 if self.session.mech_state.twist_deg > 0 else +1.0
            self._twist_until(up, lambda: abs(self.session.mech_state.twist_deg) < 4.0,
                              sign, max_cycles=4)
        self._move_wrist([0, 0, 0.012])

    def _advance_step(self, ds: float, track_wrist: bool) -> None:
        """One rail-advance increment: tips push along the local tangent;
        on horizontal tasks the wrist follows the object's straight-line
        path to keep the fingers centered."""
        mech = self.session.mechanism
        state = self.session.mech_state
        h = np.radians(mech.tangent_heading_deg(state.s))
        push = np.array([np.cos(h), np.sin(h), 0.0]) * ds
        targets = {n: p + push for n, p in self._tips_now().items()}
        if track_wrist:
            # update the wrist before the IK solve so the joint targets
            # compensate for the wrist's own motion
            self.wrist_offset = self.wrist_offset.copy()
            self.wrist_offset[0, 3] += ds
        self._emit(q=self._solve_tips(targets))

    def _tip_drift(self) -> float:
        grips = self._grip_points()
        tips = self._tips_now()
        return max(float(np.linalg.norm(tips[n] - grips[n])) for n in tips)

    def _run_curved_rail(self) -> None:
        mech = self.session.mechanism
        track_wrist = self.task.axis_tag != "fixed"
        up = [0.0, 0.0, 1.0]
        n = len(mech.sections)
        guard = 0
        fruitless = 0
        while self.session.mech_state.cleared < n and guard < 40:
            guard += 1
            j = self.session.mech_state.cleared
            rot = mech.sections[j][1]
            aligned = lambda: abs(self.session.mech_state.heading_deg - rot) <= 5.0  # noqa: B023,E731
            sign = 1.0 if rot >= self.session.mech_state.heading_deg else -1.0
            if not self._twist_until(up, aligned, sign, max_cycles=6):
                return  # heading beyond this embodiment
            # push toward the section boundary, regripping when the tips
            # drift off the surface or transfer dies
            stalled = 0
            dead_regrips = 0
            s_burst0 = self.session.mech_state.s
            s_last_regrip = s_burst0
            for _ in range(60):
                state = self.session.mech_state
                if state.cleared > j or self.now > MAX_TRIAL_TIME - 10:
                    break
                if abs(state.heading_deg - rot) > 5.0:
                    break  # heading slipped; realign
                if dead_regrips >= 4:
                    break  # regripping is not buying any advance
                if self._tip_drift() > 0.0045:
                    self._release()
                    self._regrip()
                    dead_regrips = (dead_regrips + 1
                                    if state.s - s_last_regrip < 0.0005 else 0)
                    s_last_regrip = state.s
                    continue
                s0 = state.s
                self._advance_step(0.0015, track_wrist)
                if self.session.mech_state.s - s0 < 0.0003:
                    stalled += 1
                    if stalled >= 3:
                        self._release()
                        self._regrip()
                        dead_regrips = (dead_regrips + 1
                                        if self.session.mech_state.s - s_last_regrip < 0.0005
                                        else 0)
                        s_last_regrip = self.session.mech_state.s
                        stalled = 0
                else:
                    stalled = 0
            if (self.session.mech_state.cleared <= j
                    and self.session.mech_state.s - s_burst0 < 0.0005):
                fruitless += 1
                if fruitless >= 2:
                    return  # the section is beyond this embodiment's reach
            else:
                fruitless = 0
            if self.now > MAX_TRIAL_TIME - 10:
                return

    def _run_rotor_like(self, axis: np.ndarray, target_check) -> None:
        """Forward gaiting shared by rotor, gear, and screw tasks: twist in
        the driving direction, release, snap back to the canonical grip."""
        self._twist_until(axis, target_check, +1.0, step_deg=3.0,
                          wiggle_budget_deg=24.0, max_cycles=70)

    def _run_grasp(self) -> None:
        mech = self.session.mechanism
        lift = mech.lift_threshold - self._object_pose()[2, 3] + 0.015
        self._move_wrist([0, 0, lift])
        target_c = (mech.target_min + mech.target_max) / 2.0
        here = self._object_pose()[:3, 3]
        self._move_wrist([target_c[0] - here[0], target_c[1] - here[1], 0.0])
        drop = here[2] + lift - target_c[2]
        self._move_wrist([0, 0, -min(drop * 0.5, 0.03)])
        self._release()
        self._settle(3)

    # ------------------------------------------------------------------

    def generate(self) -> list[dict]:
        self.rows = [
            {
                "type": "create",
                "protocol_version": PROTOCOL_VERSION,
                "task_id": self.task_id,
                "embodiment_id": self.embodiment_id,
                "config": {"manual_tick": True},
            },
            {"type": "start_trial", "protocol_version": PROTOCOL_VERSION, "t": 0.0,
             "practice": False},
        ]
        self.session.start_trial(t=0.0)
        self._settle(2)

        mech_type = self.task.mechanism_type
        if mech_type == "notch_rod":
            self._run_notch_rod()
        elif mech_type == "curved_rail":
            self._run_curved_rail()
        elif mech_type == "rotor":
            axis = np.asarray(self.task.mechanism_params.get("axis", [0, 1, 0]), float)
            axis = axis * float(self.task.mechanism_params.get("ratchet_direction", 1))
            self._run_rotor_like(
                axis, lambda: self.session.mech_state.accumulated_deg >= 360.0)
        elif mech_type == "gear":
            axis = np.asarray(self.task.mechanism_params.get("axis", [0, 1, 0]), float)
            self._run_rotor_like(
                axis, lambda: self.session.mech_state.max_output_excursion_deg >= 360.0)
        elif mech_type == "screw":
            axis = np.asarray(self.task.mechanism_params.get("axis", [0, 0, 1]), float)
            direction = float(self.task.mechanism_params.get("unscrew_direction", 1))
            self._run_rotor_like(
                axis * direction, lambda: self.session.mech_state.removed)
        elif mech_type == "grasp":
            self._run_grasp()
        else:
            raise ValueError(f"no scripted policy for mechanism {mech_type!r}")

        self._settle(1)
        self.rows.append({"type": "finalize", "protocol_version": PROTOCOL_VERSION,
                          "t": self.now})
        return self.rows


def _quat(T: np.ndarray) -> np.ndarray:
    from .geometry import matrix_to_quat

    return matrix_to_quat(T[:3, :3])


def scripted_policy(task_id: str, embodiment_id: str = "hand_full",
                    seed: int = 0) -> list[dict]:
    """Input-log rows for one scripted trial."""
    return ScriptedPolicy(task_id, embodiment_id, seed=seed).generate()
