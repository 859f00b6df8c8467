"""Wire protocol: structured text messages with a ``type`` field.

Client to server: create, start_trial, input, finalize (plus tick in
manual-tick sessions, used by the replay tooling and tests).
Server to client: state, record, error.
Numeric fields are meters, radians, and seconds. All messages carry
``protocol_version``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import matrix_to_quat, quat_to_matrix

PROTOCOL_VERSION = 1

CLIENT_TYPES = ("create", "start_trial", "input", "finalize", "tick")
SERVER_TYPES = ("state", "record", "error")

ERROR_CODES = {
    "bad_message": 1,
    "unknown_task": 2,
    "unknown_embodiment": 3,
    "bad_state": 4,
    "version_mismatch": 5,
}


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def to_message(self) -> dict:
        return {
            "type": "error",
            "protocol_version": PROTOCOL_VERSION,
            "code": self.code,
            "message": str(self),
        }


@dataclass(frozen=True)
class InputFrame:
    """One operator input sample: either a full keypoint set or direct
    joint targets, optionally with a wrist pose command."""

    seq: int
    t: float  # client timestamp, s
    joints: np.ndarray | None = None  # (16,) radians
    keypoints: np.ndarray | None = None  # (22, 3) m, wrist-relative
    wrist: np.ndarray | None = None  # 4x4

    def to_dict(self, t_override: float | None = None) -> dict:
        d: dict = {
            "type": "input",
            "protocol_version": PROTOCOL_VERSION,
            "seq": self.seq,
            "t": self.t if t_override is None else t_override,
        }
        if self.joints is not None:
            d["joints"] = [float(v) for v in self.joints]
        if self.keypoints is not None:
            d["keypoints"] = [[float(v) for v in row] for row in self.keypoints]
        if self.wrist is not None:
            d["wrist"] = {
                "position": [float(v) for v in self.wrist[:3, 3]],
                "quaternion": [float(v) for v in matrix_to_quat(self.wrist[:3, :3])],
            }
        return d


def check_version(msg: dict) -> None:
    v = msg.get("protocol_version")
    if v != PROTOCOL_VERSION:
        raise ProtocolError(
            "version_mismatch",
            f"protocol_version {v!r} not supported (expected {PROTOCOL_VERSION})",
        )


def parse_input_frame(msg: dict) -> InputFrame:
    """Validate and decode an ``input`` message; raises ProtocolError on
    malformed content (callers drop and count those)."""
    check_version(msg)
    if msg.get("type") != "input":
        raise ProtocolError("bad_message", f"expected input message, got {msg.get('type')!r}")
    try:
        seq = int(msg["seq"])
        t = float(msg["t"])
    except (KeyError, TypeError, ValueError):
        raise ProtocolError("bad_message", "input needs integer seq and numeric t") from None
    if not np.isfinite(t):
        raise ProtocolError("bad_message", "non-finite timestamp")

    joints = keypoints = wrist = None
    if "joints" in msg:
        joints = np.asarray(msg["joints"], dtype=float)
        if joints.shape != (16,) or not np.all(np.isfinite(joints)):
            raise ProtocolError("bad_message", "joints must be 16 finite numbers")
    if "keypoints" in msg:
        keypoints = np.asarray(msg["keypoints"], dtype=float)
        if keypoints.shape != (22, 3) or not np.all(np.isfinite(keypoints)):
            raise ProtocolError("bad_message", "keypoints must be a finite (22, 3) array")
    if joints is None and keypoints is None:
        raise ProtocolError("bad_message", "input needs joints or keypoints")
    if joints is not None and keypoints is not None:
        raise ProtocolError("bad_message", "input cannot carry both joints and keypoints")
    if "wrist" in msg:
        w = msg["wrist"]
        pos = np.asarray(w.get("position", [0, 0, 0]), dtype=float)
        quat = np.asarray(w.get("quaternion", [1, 0, 0, 0]), dtype=float)
        if pos.shape != (3,) or quat.shape != (4,) or not (
            np.all(np.isfinite(pos)) and np.all(np.isfinite(quat))
        ) or abs(np.linalg.norm(quat)) < 1e-9:
            raise ProtocolError("bad_message", "malformed wrist pose")
        wrist = np.eye(4)
        wrist[:3, :3] = quat_to_matrix(quat)
        wrist[:3, 3] = pos
    return InputFrame(seq=seq, t=t, joints=joints, keypoints=keypoints, wrist=wrist)


def pose_dict(T: np.ndarray) -> dict:
    return {
        "position": [float(v) for v in T[:3, 3]],
        "quaternion": [float(v) for v in matrix_to_quat(T[:3, :3])],
    }
