"""Benchmark session: one trial of one task under one embodiment.

A session owns its mechanism state and hand state and advances strictly
in tick order. Input frames land in a single freshest-wins slot; each
tick applies the newest command, runs the hand-object pipeline
(retarget/clamp -> embodiment -> FK -> contacts -> attachment -> rigid
fit -> mechanism step), and recomputes progress and the provisional
score. Time always comes from the caller, so replaying a logged stream
through a fresh session reproduces the trial record bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..geometry import invert_transform, matrix_to_rotvec
from ..grasp import attachment, detect_contacts, fit_rigid_motion
from ..hand import HandModel, HandPose, default_model
from ..mechanisms import Catalog, MotionCommand, TaskDef, default_catalog
from ..retarget import CalibrationParams, RetargetConfig, WristPassthrough, retarget
from ..scoring import BaselineTable, TrialRecord, correctness_from_state
from .protocol import PROTOCOL_VERSION, InputFrame, ProtocolError, pose_dict

DEFAULT_TICK_PERIOD = 0.01  # s
DEFAULT_STATE_PERIOD = 0.02  # 50 Hz broadcast


class SessionError(ValueError):
    """Operation not allowed in the session's current state."""


@dataclass
class SessionConfig:
    tick_period: float = DEFAULT_TICK_PERIOD
    state_period: float = DEFAULT_STATE_PERIOD
    capture_distance: float = 0.008
    manual_tick: bool = False  # tick on explicit messages (replay/tests)
    source: str = "live"
    retarget: RetargetConfig = field(default_factory=RetargetConfig)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)

    @classmethod
    def from_overrides(cls, overrides: dict | None) -> "SessionConfig":
        cfg = cls()
        for key in ("tick_period", "state_period", "capture_distance"):
            if overrides and key in overrides:
                setattr(cfg, key, float(overrides[key]))
        if overrides and "manual_tick" in overrides:
            cfg.manual_tick = bool(overrides["manual_tick"])
        if overrides and "source" in overrides:
            cfg.source = str(overrides["source"])
        return cfg

    def to_dict(self) -> dict:
        return {
            "tick_period": self.tick_period,
            "state_period": self.state_period,
            "capture_distance": self.capture_distance,
            "manual_tick": self.manual_tick,
            "source": self.source,
        }


class Session:
    def __init__(
        self,
        session_id: str,
        task: TaskDef,
        embodiment_id: str,
        model: HandModel | None = None,
        config: SessionConfig | None = None,
        baselines: BaselineTable | None = None,
    ):
        self.id = session_id
        self.task = task
        self.model = model or default_model()
        self.embodiment = self.model.embodiment(embodiment_id)  # raises on unknown
        self.embodiment_id = embodiment_id
        self.config = config or SessionConfig()
        self.baselines = baselines

        self.mechanism = task.build_mechanism()
        self.mech_state = self.mechanism.initial_state()
        self.status = "idle"  # idle -> running -> finished

        self.q = self.model.clamp_to_limits(self.embodiment.apply(task.hand_start.q))
        self.wrist = task.hand_start.wrist.copy()
        self._idle_wrist_ref: np.ndarray | None = None
        self._trial_wrist0 = self.wrist.copy()
        self.passthrough = WristPassthrough(task.axis_tag)

        self.t_start = 0.0
        self.now = 0.0
        self.practice = False
        self.last_seq = -1
        self.pending: InputFrame | None = None
        self.events: list[tuple[float, float]] = []
        self.progress = 0.0
        self.input_frames = 0
        self.dropped_frames = 0
        self.stale_frames = 0
        self.rejected_steps = 0
        self.consumed_log: list[dict] = []

        self._prev_attach = attachment(detect_contacts(
            self._keypoints(), self.task.object,
            self.mechanism.object_pose(self.mech_state), self.config.capture_distance,
        ))
        self._prev_tips = self._tip_positions()
        self._prev_wrist = self.wrist.copy()
        self._last_state_update: dict | None = None

    # ------------------------------------------------------------------

    def _keypoints(self) -> np.ndarray:
        return self.model.forward_kinematics(HandPose(q=self.q, wrist=self.wrist))

    def _tip_positions(self) -> dict[str, np.ndarray]:
        from ..hand import TIP_KEYPOINTS, keypoint_index

        kp = self._keypoints()
        return {name: kp[keypoint_index(name)].copy() for name in TIP_KEYPOINTS}

    # ------------------------------------------------------------------
    # Input
    # ------------------------------------------------------------------

    def submit_frame(self, frame: InputFrame) -> str:
        """Freshest-frame-overwrite slot; returns accepted|stale."""
        if frame.seq <= self.last_seq:
            self.stale_frames += 1
            return "stale"
        self.pending = frame
        return "accepted"

    def count_dropped(self) -> None:
        self.dropped_frames += 1

    # ------------------------------------------------------------------
    # Lifecycle
    # ------------------------------------------------------------------

    def start_trial(self, t: float = 0.0, practice: bool = False) -> None:
        if self.status != "idle":
            raise SessionError(f"cannot start trial in state {self.status}")
        self.status = "running"
        self.t_start = float(t)
        self.now = float(t)
        self.practice = practice
        self.passthrough.reset()
        self._trial_wrist0 = self.wrist.copy()
        self._prev_wrist = self.wrist.copy()
        self._prev_tips = self._tip_positions()
        self.events = []
        self.consumed_log = []

    def finalize(self) -> TrialRecord:
        if self.status != "running":
            raise SessionError(f"cannot finalize in state {self.status}")
        self.status = "finished"
        elapsed = self.now - self.t_start
        duration = max(elapsed, self.config.tick_period)
        correctness = correctness_from_state(self.mechanism, self.mech_state)
        return TrialRecord(
            task_id=self.task.id,
            embodiment_id=self.embodiment_id,
            start_time=self.t_start,
            end_time=self.now,
            duration=duration,
            correctness=correctness,
            events=tuple(self.events),
            source=self.config.source,
            practice=self.practice,
            final_state=self.mechanism.state_dict(self.mech_state),
            input_frames=self.input_frames,
            dropped_frames=self.dropped_frames,
            rejected_steps=self.rejected_steps,
        )

    # ------------------------------------------------------------------
    # Tick
    # ------------------------------------------------------------------

    def _apply_frame(self, frame: InputFrame) -> None:
        self.input_frames += 1
        self.last_seq = frame.seq
        if frame.joints is not None:
            self.q = self.model.clamp_to_limits(self.embodiment.apply(frame.joints))
        elif frame.keypoints is not None:
            result = retarget(self.config.calibration, self.config.retarget, self.model,
                              self.embodiment, frame.keypoints, self.q)
            self.q = result.q
        if frame.wrist is not None:
            if self.status == "running":
                rel = self.passthrough(frame.wrist)
                self.wrist = rel @ self._trial_wrist0
            else:
                # pre-trial adjustment: unconstrained relative motion
                if self._idle_wrist_ref is None:
                    self._idle_wrist_ref = (self.task.hand_start.wrist
                                            @ invert_transform(frame.wrist))
                self.wrist = self._idle_wrist_ref @ frame.wrist

    def tick(self, now: float) -> dict:
        """Advance to ``now`` (one step) and return the state update."""
        if self.status == "finished":
            raise SessionError("session is finished")
        dt = self.config.tick_period
        frame = self.pending
        self.pending = None
        consumed = None
        if frame is not None:
            consumed = frame.to_dict(t_override=float(now))
            self._apply_frame(frame)

        if self.status == "running":
            self.now = float(now)
            kp_tips = self._tip_positions()
            contacts = detect_contacts(
                self._keypoints(), self.task.object,
                self.mechanism.object_pose(self.mech_state), self.config.capture_distance,
            )
            attach = attachment(contacts)

            cmd = MotionCommand(gripped=attach.attached)
            if attach.attached and self._prev_attach.attached:
                tips = [k for k in self._prev_attach.grasp_keypoints if k in kp_tips]
                if len(tips) >= 2:
                    prev_pts = np.array([self._prev_tips[k] for k in tips])
                    next_pts = np.array([kp_tips[k] for k in tips])
                    fit = fit_rigid_motion(prev_pts, next_pts)
                    center = self.mechanism.object_pose(self.mech_state)[:3, 3]
                    new_center = fit.rotation @ center + fit.translation
                    rotvec = matrix_to_rotvec(fit.rotation)
                    if fit.degenerate and self.task.axis_tag == "free":
                        # two-point convention: spin about the contact pair
                        # axis comes from the commanded wrist twist
                        axis = next_pts[1] - next_pts[0]
                        n = np.linalg.norm(axis)
                        if n > 1e-9:
                            axis = axis / n
                            wrist_rot = matrix_to_rotvec(
                                self.wrist[:3, :3] @ self._prev_wrist[:3, :3].T
                            )
                            rotvec = rotvec + axis * float(wrist_rot @ axis)
                    cmd = MotionCommand.from_arrays(new_center - center, rotvec, True)

            self.mech_state, info = self.mechanism.step(self.mech_state, cmd, dt)
            if info.rejected:
                self.rejected_steps += 1

            new_progress = float(self.mechanism.progress(self.mech_state))
            if new_progress != self.progress:
                elapsed = self.now - self.t_start
                self.events.append((elapsed if elapsed > 0 else dt, new_progress))
                self.progress = new_progress

            self._prev_attach = attach
            self._prev_tips = kp_tips
            self._prev_wrist = self.wrist.copy()
            if consumed is not None:
                self.consumed_log.append(consumed)

        update = self.state_update()
        self._last_state_update = update
        return update

    # ------------------------------------------------------------------

    def provisional_score(self) -> dict:
        c = self.progress
        elapsed = max(self.now - self.t_start, self.config.tick_period)
        v = 0.0
        if c >= 1.0 and self.baselines is not None and self.task.id in self.baselines:
            v = self.baselines.time(self.task.id) / elapsed
        return {"correctness": c, "speed": v, "score": (4.0 * c + v) / 5.0}

    def state_update(self) -> dict:
        kp = self._keypoints()
        return {
            "type": "state",
            "protocol_version": PROTOCOL_VERSION,
            "session_id": self.id,
            "task_id": self.task.id,
            "embodiment_id": self.embodiment_id,
            "status": self.status,
            "elapsed": self.now - self.t_start if self.status != "idle" else 0.0,
            "progress": self.progress,
            "provisional": self.provisional_score(),
            "keypoints": [[float(v) for v in row] for row in kp],
            "q": [float(v) for v in self.q],
            "wrist": pose_dict(self.wrist),
            "object": pose_dict(self.mechanism.object_pose(self.mech_state)),
            "mechanism": self.mechanism.state_dict(self.mech_state),
            "attached": bool(self._prev_attach.attached),
            "counters": {
                "input_frames": self.input_frames,
                "dropped_frames": self.dropped_frames,
                "stale_frames": self.stale_frames,
                "rejected_steps": self.rejected_steps,
            },
        }


class SessionManager:
    """Creates sessions against a catalog and persists finalized records."""

    def __init__(self, catalog: Catalog | None = None, model: HandModel | None = None,
                 store_path=None, baselines: BaselineTable | None = None):
        self.catalog = catalog or default_catalog()
        self.model = model or default_model()
        self.store_path = store_path
        self.baselines = baselines
        self.sessions: dict[str, Session] = {}
        self._counter = 0

    def create(self, task_id: str, embodiment_id: str,
               overrides: dict | None = None) -> Session:
        if task_id not in self.catalog:
            valid = ", ".join(t.id for t in self.catalog)
            raise ProtocolError("unknown_task", f"unknown task {task_id!r}; valid: {valid}")
        if embodiment_id not in self.model.embodiments:
            valid = ", ".join(sorted(self.model.embodiments))
            raise ProtocolError("unknown_embodiment",
                                f"unknown embodiment {embodiment_id!r}; valid: {valid}")
        self._counter += 1
        session_id = f"s{self._counter:06d}"
        session = Session(
            session_id=session_id,
            task=self.catalog.get(task_id),
            embodiment_id=embodiment_id,
            model=self.model,
            config=SessionConfig.from_overrides(overrides),
            baselines=self.baselines,
        )
        self.sessions[session_id] = session
        return session

    def finalize(self, session: Session) -> tuple[TrialRecord, int | None]:
        record = session.finalize()
        trial_id = None
        if self.store_path is not None:
            from ..scoring import append_trial

            trial_id = _count_lines(self.store_path)
            append_trial(self.store_path, record)
        return record, trial_id


def _count_lines(path) -> int:
    try:
        with open(path) as f:
            return sum(1 for line in f if line.strip())
    except FileNotFoundError:
        return 0


# ----------------------------------------------------------------------
# Log-driven execution (simulate / replay)
# ----------------------------------------------------------------------

def run_log(rows: list[dict], manager: SessionManager,
            source: str = "replay") -> tuple[TrialRecord, list[dict], Session]:
    """Drive a fresh session from a message log and return the trial
    record plus the canonical consumed-input log.

    The log is the wire format: a create row, a start_trial row, input
    rows (t = effective tick time), and a finalize row. Ticks run on the
    session's fixed grid between start and finalize.
    """
    from .protocol import check_version, parse_input_frame

    it = iter(rows)
    try:
        create = next(it)
    except StopIteration:
        raise ProtocolError("bad_message", "empty input log") from None
    if create.get("type") != "create":
        raise ProtocolError("bad_message", "log must begin with a create row")
    check_version(create)
    overrides = dict(create.get("config", {}))
    overrides["source"] = source
    session = manager.create(create["task_id"], create["embodiment_id"], overrides)

    start_row = next((r for r in it if r.get("type") == "start_trial"), None)
    if start_row is None:
        raise ProtocolError("bad_message", "log has no start_trial row")
    t0 = float(start_row.get("t", 0.0))
    session.start_trial(t=t0, practice=bool(start_row.get("practice", False)))

    frames: list[InputFrame] = []
    t_final = None
    for row in it:
        if row.get("type") == "input":
            frames.append(parse_input_frame(row))
        elif row.get("type") == "finalize":
            t_final = float(row.get("t", t0))
            break
    if t_final is None:
        raise ProtocolError("bad_message", "log has no finalize row")

    dt = session.config.tick_period
    n_ticks = max(0, int(round((t_final - t0) / dt)))
    fi = 0
    for k in range(1, n_ticks + 1):
        now = t0 + k * dt
        while fi < len(frames) and frames[fi].t <= now + 1e-12:
            session.submit_frame(frames[fi])
            fi += 1
        session.tick(now)

    record, _ = manager.finalize(session)
    canonical = [
        {
            "type": "create",
            "protocol_version": PROTOCOL_VERSION,
            "task_id": create["task_id"],
            "embodiment_id": create["embodiment_id"],
            "config": create.get("config", {}),
        },
        {"type": "start_trial", "protocol_version": PROTOCOL_VERSION, "t": t0,
         "practice": bool(start_row.get("practice", False))},
        *session.consumed_log,
        {"type": "finalize", "protocol_version": PROTOCOL_VERSION, "t": t_final},
    ]
    return record, canonical, session


def read_log(path) -> list[dict]:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_log(rows: list[dict], path) -> None:
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True, separators=(",", ":")))
            f.write("\n")
