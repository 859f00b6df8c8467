"""Relative wrist pose stream with per-task axis projection."""

from __future__ import annotations

import numpy as np

from ..geometry import invert_transform

AXIS_TAGS = ("fixed", "vertical", "horizontal", "free")
_AXIS_VECTOR = {"vertical": np.array([0.0, 0.0, 1.0]), "horizontal": np.array([1.0, 0.0, 0.0])}


def project_axis(relative: np.ndarray, axis_tag: str) -> np.ndarray:
    """Project a relative wrist transform onto the allowed task motion.

    fixed -> identity; vertical/horizontal -> translation along that axis
    only; free -> unchanged.
    """
    if axis_tag not in AXIS_TAGS:
        raise ValueError(f"unknown axis tag {axis_tag!r}; expected one of {AXIS_TAGS}")
    if axis_tag == "free":
        return np.asarray(relative, dtype=float)
    out = np.eye(4)
    if axis_tag == "fixed":
        return out
    axis = _AXIS_VECTOR[axis_tag]
    out[:3, 3] = axis * float(relative[:3, 3] @ axis)
    return out


class WristPassthrough:
    """Streams operator wrist poses as projected poses relative to the
    first pose seen."""

    def __init__(self, axis_tag: str = "free"):
        if axis_tag not in AXIS_TAGS:
            raise ValueError(f"unknown axis tag {axis_tag!r}; expected one of {AXIS_TAGS}")
        self.axis_tag = axis_tag
        self._reference_inv: np.ndarray | None = None

    @property
    def has_reference(self) -> bool:
        return self._reference_inv is not None

    def reset(self) -> None:
        self._reference_inv = None

    def __call__(self, pose: np.ndarray) -> np.ndarray:
        pose = np.asarray(pose, dtype=float)
        if self._reference_inv is None:
            self._reference_inv = invert_transform(pose)
        return project_axis(self._reference_inv @ pose, self.axis_tag)
