"""Keyvector features used by the retargeting energy.

A feature is the 3-vector between two labeled keypoints. The default set
pairs each digit's tip, distal, and mid keypoints against the wrist, plus
the four adjacent tip-to-tip vectors. Tip-only keyvectors leave the
four-joint thumb underdetermined (three tip coordinates cannot pin four
angles), so the mid/distal vectors are part of the default set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..hand import DIGITS, HandModel, keypoint_index


def default_feature_pairs() -> tuple[tuple[str, str], ...]:
    pairs: list[tuple[str, str]] = []
    for digit in DIGITS:
        pairs.append((f"{digit}_tip", "wrist"))
        pairs.append((f"{digit}_distal", "wrist"))
        pairs.append((f"{digit}_mid", "wrist"))
    for a, b in zip(DIGITS[:-1], DIGITS[1:]):
        pairs.append((f"{b}_tip", f"{a}_tip"))
    return tuple(pairs)


@dataclass(frozen=True)
class RetargetConfig:
    """Solver settings; the iteration cap keeps one solve inside the
    streaming latency budget."""

    features: tuple[tuple[str, str], ...] = field(default_factory=default_feature_pairs)
    weights: tuple[float, ...] | None = None  # defaults to 1.0 each
    smoothness: float = 0.05  # weight on ||q - q_prev||^2
    max_nfev: int = 60
    tol: float = 1e-10

    def __post_init__(self):
        if self.weights is not None and len(self.weights) != len(self.features):
            raise ValueError("weights must match the feature list length")
        if any(w <= 0 for w in self.weights or ()):
            raise ValueError("feature weights must be positive")
        if self.smoothness < 0:
            raise ValueError("smoothness must be non-negative")

    @property
    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.features))
        return np.asarray(self.weights, dtype=float)

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.array([keypoint_index(p[0]) for p in self.features])
        b = np.array([keypoint_index(p[1]) for p in self.features])
        return a, b


def feature_vectors(keypoints: np.ndarray, cfg: RetargetConfig) -> np.ndarray:
    """Stack the configured keyvectors from a (22, 3) keypoint array."""
    a, b = cfg.indices()
    return keypoints[a] - keypoints[b]


def feature_jacobian(J_keypoints: np.ndarray, cfg: RetargetConfig) -> np.ndarray:
    """(n_features, 3, n_joints) from the (22, 3, n_joints) keypoint Jacobian."""
    a, b = cfg.indices()
    return J_keypoints[a] - J_keypoints[b]


def model_features(model: HandModel, q: np.ndarray, cfg: RetargetConfig) -> np.ndarray:
    from ..hand import HandPose

    return feature_vectors(model.forward_kinematics(HandPose(q=q)), cfg)
