"""Anthropomorphic hand as a kinematic chain.

The hand is a tree of rotational joints hanging off a palm link. The full
model has 16 actuated joints (thumb: abduction + 3 flexions, each finger:
abduction + 2 flexions) plus one passive distal joint per finger that
mimics the second flexion with a fixed coupling ratio, so the 22 labeled
keypoints (forearm, wrist, then base/mid/distal/tip per digit) are fully
determined by the 16-vector q and a wrist transform.

Embodiment variants lock subsets of joints at zero; the lock masks live in
the model file so the joint selection can change without code changes.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

from .geometry import make_transform, rotation_about_axis, rpy_matrix

HAND_FORMAT_VERSION = 1

DIGITS = ("thumb", "index", "middle", "ring", "pinky")

#: Fixed keypoint labeling: forearm and wrist first, then (digit, joint)
#: in anatomical digit order, proximal to distal.
KEYPOINT_NAMES: tuple[str, ...] = ("forearm", "wrist") + tuple(
    f"{digit}_{part}" for digit in DIGITS for part in ("base", "mid", "distal", "tip")
)

TIP_KEYPOINTS = tuple(f"{digit}_tip" for digit in DIGITS)


def keypoint_index(name: str) -> int:
    return KEYPOINT_NAMES.index(name)


class HandModelError(ValueError):
    """Malformed hand model data or mismatched inputs."""


@dataclass(frozen=True)
class JointSpec:
    """One rotational joint: child link frame = parent frame . origin . Rot(axis, angle)."""

    name: str
    parent: str
    child: str
    origin_xyz: np.ndarray
    origin_rpy: np.ndarray  # radians, R = Rz(yaw) Ry(pitch) Rx(roll)
    axis: np.ndarray
    limits: tuple[float, float]  # radians, lo <= 0 <= hi
    mimic: tuple[str, float] | None = None  # (actuated joint name, ratio) for passive joints

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise HandModelError(f"joint {self.name}: axis must have unit norm")
        lo, hi = self.limits
        if not (lo <= 0.0 <= hi):
            raise HandModelError(f"joint {self.name}: limits must contain 0, got [{lo}, {hi}]")
        object.__setattr__(self, "origin_xyz", np.asarray(self.origin_xyz, dtype=float))
        object.__setattr__(self, "origin_rpy", np.asarray(self.origin_rpy, dtype=float))
        object.__setattr__(self, "axis", axis)

    @property
    def origin(self) -> np.ndarray:
        return make_transform(rpy_matrix(*self.origin_rpy), self.origin_xyz)


@dataclass(frozen=True)
class Embodiment:
    """A named subset of active joints; locked joints are forced to zero."""

    name: str
    lock_mask: np.ndarray  # bool per actuated joint, True = locked

    def __post_init__(self):
        object.__setattr__(self, "lock_mask", np.asarray(self.lock_mask, dtype=bool))

    @property
    def dof_count(self) -> int:
        return int((~self.lock_mask).sum())

    def apply(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != self.lock_mask.shape:
            raise HandModelError(
                f"embodiment {self.name}: expected {self.lock_mask.size} joints, got {q.size}"
            )
        out = q.copy()
        out[self.lock_mask] = 0.0
        return out


@dataclass(frozen=True)
class HandPose:
    """Joint vector (radians) plus the wrist frame in world coordinates."""

    q: np.ndarray
    wrist: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "wrist", np.asarray(self.wrist, dtype=float))


class HandModel:
    """Kinematic hand model with precomputed chain structure.

    ``joints`` holds the actuated joints in their documented fixed order;
    passive mimic joints (finger distal couplings) are tracked separately
    and never appear in q.
    """

    def __init__(
        self,
        joints: list[JointSpec],
        passive_joints: list[JointSpec],
        keypoint_map: dict[str, tuple[str, list[float]]],
        embodiments: dict[str, Embodiment],
        root_link: str = "palm",
    ):
        if len(joints) != 16:
            raise HandModelError(f"full hand model must have 16 actuated joints, got {len(joints)}")
        if tuple(keypoint_map) != KEYPOINT_NAMES:
            raise HandModelError("keypoint_map must define exactly the 22 documented keypoints in order")
        self.joints = list(joints)
        self.passive_joints = list(passive_joints)
        self.root_link = root_link
        self.embodiments = dict(embodiments)
        self.joint_index = {j.name: i for i, j in enumerate(self.joints)}

        self._chain = self._order_chain()
        self.link_names = [root_link] + [j.child for j in self._chain]
        self._link_index = {name: i for i, name in enumerate(self.link_names)}
        self._parent_index = np.array(
            [self._link_index[j.parent] for j in self._chain], dtype=int
        )
        self._origins = np.stack([j.origin for j in self._chain])
        self._axes = np.stack([j.axis for j in self._chain])
        # Actuated index driving each chain joint, and its gain (1 or mimic ratio).
        self._drive = []
        for j in self._chain:
            if j.mimic is None:
                self._drive.append((self.joint_index[j.name], 1.0))
            else:
                src, ratio = j.mimic
                if src not in self.joint_index:
                    raise HandModelError(f"passive joint {j.name} mimics unknown joint {src}")
                self._drive.append((self.joint_index[src], float(ratio)))

        self._kp_link = np.array(
            [self._link_index[link] for link, _ in keypoint_map.values()], dtype=int
        )
        self._kp_offset = np.array([off for _, off in keypoint_map.values()], dtype=float)
        self.keypoint_map = {k: (link, np.asarray(off, float)) for k, (link, off) in keypoint_map.items()}

        self.lower = np.array([j.limits[0] for j in self.joints])
        self.upper = np.array([j.limits[1] for j in self.joints])

        # keypoints influenced by each chain joint (descendant links)
        self._kp_affected = self._keypoint_influence()

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    def _order_chain(self) -> list[JointSpec]:
        """Topological order, parents before children."""
        all_joints = self.joints + self.passive_joints
        by_parent: dict[str, list[JointSpec]] = {}
        for j in all_joints:
            by_parent.setdefault(j.parent, []).append(j)
        ordered: list[JointSpec] = []
        frontier = [self.root_link]
        while frontier:
            link = frontier.pop(0)
            for j in by_parent.get(link, []):
                ordered.append(j)
                frontier.append(j.child)
        if len(ordered) != len(all_joints):
            dangling = {j.name for j in all_joints} - {j.name for j in ordered}
            raise HandModelError(f"joints not connected to {self.root_link}: {sorted(dangling)}")
        return ordered

    def _keypoint_influence(self) -> list[np.ndarray]:
        """For each chain joint, indices of keypoints on its subtree."""
        children: dict[int, list[int]] = {}
        for ci, pi in enumerate(self._parent_index):
            children.setdefault(int(pi), []).append(ci + 1)
        out = []
        for ci in range(len(self._chain)):
            sub = set()
            stack = [ci + 1]
            while stack:
                li = stack.pop()
                sub.add(li)
                stack.extend(children.get(li, []))
            out.append(np.flatnonzero(np.isin(self._kp_link, sorted(sub))))
        return out

    # ------------------------------------------------------------------
    # Kinematics
    # ------------------------------------------------------------------

    def _check_q(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (len(self.joints),):
            raise HandModelError(f"expected joint vector of length {len(self.joints)}, got {q.shape}")
        return q

    def link_transforms(self, q: np.ndarray, wrist: np.ndarray | None = None) -> np.ndarray:
        """World transforms of every link, indexed like ``link_names``."""
        q = self._check_q(q)
        n = len(self._chain)
        T = np.empty((n + 1, 4, 4))
        T[0] = np.eye(4) if wrist is None else wrist
        for ci in range(n):
            src, gain = self._drive[ci]
            local = self._origins[ci].copy()
            local[:3, :3] = local[:3, :3] @ rotation_about_axis(self._axes[ci], gain * q[src])
            T[ci + 1] = T[self._parent_index[ci]] @ local
        return T

    def forward_kinematics(self, pose: HandPose) -> np.ndarray:
        """22 labeled keypoints as a (22, 3) array, meters, KEYPOINT_NAMES order."""
        T = self.link_transforms(pose.q, pose.wrist)
        R = T[self._kp_link, :3, :3]
        t = T[self._kp_link, :3, 3]
        return np.einsum("kij,kj->ki", R, self._kp_offset) + t

    def keypoint_jacobian(self, q: np.ndarray, wrist: np.ndarray | None = None) -> np.ndarray:
        """Analytic Jacobian d keypoints / d q, shape (22, 3, 16)."""
        q = self._check_q(q)
        T = self.link_transforms(q, wrist)
        points = (
            np.einsum("kij,kj->ki", T[self._kp_link, :3, :3], self._kp_offset)
            + T[self._kp_link, :3, 3]
        )
        J = np.zeros((len(KEYPOINT_NAMES), 3, len(self.joints)))
        for ci in range(len(self._chain)):
            src, gain = self._drive[ci]
            axis_world = T[ci + 1, :3, :3] @ self._axes[ci]
            origin_world = T[ci + 1, :3, 3]
            affected = self._kp_affected[ci]
            if affected.size:
                J[affected, :, src] += gain * np.cross(axis_world, points[affected] - origin_world)
        return J

    def clamp_to_limits(self, q: np.ndarray) -> np.ndarray:
        q = self._check_q(q)
        return np.clip(q, self.lower, self.upper)

    def within_limits(self, q: np.ndarray, tol: float = 0.0) -> bool:
        q = self._check_q(q)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    def embodiment(self, name: str) -> Embodiment:
        try:
            return self.embodiments[name]
        except KeyError:
            raise HandModelError(
                f"unknown embodiment {name!r}; available: {sorted(self.embodiments)}"
            ) from None

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        def joint_dict(j: JointSpec) -> dict:
            d = {
                "name": j.name,
                "parent": j.parent,
                "child": j.child,
                "origin_xyz": [float(v) for v in j.origin_xyz],
                "origin_rpy_deg": [float(np.degrees(v)) for v in j.origin_rpy],
                "axis": [float(v) for v in j.axis],
                "limits_deg": [float(np.degrees(j.limits[0])), float(np.degrees(j.limits[1]))],
            }
            if j.mimic is not None:
                d["mimic"] = {"joint": j.mimic[0], "ratio": j.mimic[1]}
            return d

        return {
            "format_version": HAND_FORMAT_VERSION,
            "root_link": self.root_link,
            "joints": [joint_dict(j) for j in self.joints],
            "passive_joints": [joint_dict(j) for j in self.passive_joints],
            "keypoints": {
                k: {"link": link, "offset": [float(v) for v in off]}
                for k, (link, off) in self.keypoint_map.items()
            },
            "embodiments": {
                name: {"locked": [self.joints[i].name for i in np.flatnonzero(e.lock_mask)]}
                for name, e in self.embodiments.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HandModel":
        version = data.get("format_version")
        if version != HAND_FORMAT_VERSION:
            raise HandModelError(
                f"unsupported hand model format_version {version!r} (expected {HAND_FORMAT_VERSION})"
            )

        def parse_joint(d: dict) -> JointSpec:
            mimic = None
            if "mimic" in d:
                mimic = (d["mimic"]["joint"], float(d["mimic"]["ratio"]))
            lo, hi = d["limits_deg"]
            return JointSpec(
                name=d["name"],
                parent=d["parent"],
                child=d["child"],
                origin_xyz=np.asarray(d["origin_xyz"], float),
                origin_rpy=np.radians(np.asarray(d["origin_rpy_deg"], float)),
                axis=np.asarray(d["axis"], float),
                limits=(float(np.radians(lo)), float(np.radians(hi))),
                mimic=mimic,
            )

        joints = [parse_joint(d) for d in data["joints"]]
        passive = [parse_joint(d) for d in data.get("passive_joints", [])]
        keypoints = {
            name: (d["link"], [float(v) for v in d["offset"]])
            for name, d in data["keypoints"].items()
        }
        name_to_idx = {j.name: i for i, j in enumerate(joints)}
        embodiments = {}
        for name, d in data.get("embodiments", {}).items():
            mask = np.zeros(len(joints), dtype=bool)
            for jn in d["locked"]:
                if jn not in name_to_idx:
                    raise HandModelError(f"embodiment {name}: unknown joint {jn}")
                mask[name_to_idx[jn]] = True
            embodiments[name] = Embodiment(name=name, lock_mask=mask)
        return cls(joints, passive, keypoints, embodiments)

    def save(self, path) -> None:
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=False)

    @classmethod
    def load(cls, path) -> "HandModel":
        with open(path) as f:
            return cls.from_dict(yaml.safe_load(f))


def apply_embodiment(embodiment: Embodiment, q: np.ndarray) -> np.ndarray:
    """Zero the locked coordinates of q; idempotent."""
    return embodiment.apply(q)


_DEFAULT_MODEL: HandModel | None = None


def default_model() -> HandModel:
    """The packaged 16-DoF hand with its four embodiment lock masks."""
    global _DEFAULT_MODEL
    if _DEFAULT_MODEL is None:
        ref = importlib.resources.files("pomdar.data").joinpath("default_hand.yaml")
        _DEFAULT_MODEL = HandModel.from_dict(yaml.safe_load(ref.read_text()))
    return _DEFAULT_MODEL
