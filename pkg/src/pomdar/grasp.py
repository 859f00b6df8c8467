"""Force-free hand-object interaction surrogate.

Contact is geometric: a fingertip keypoint within a capture distance of
the object surface counts as touching. The hand holds the object when at
least two tips touch with opposing surface normals, and held objects move
by the least-squares rigid motion of the gripping tips. Scores depend only
on achieved object motion, so this deterministic surrogate stands in for
a physics contact model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import rotation_about_axis
from .hand import TIP_KEYPOINTS, keypoint_index

DEFAULT_CONTACT_DISTANCE = 0.008  # m
OPPOSITION_ANGLE_DEG = 120.0


class GraspGeometryError(ValueError):
    """Degenerate primitive or invalid interaction input."""


@dataclass(frozen=True)
class Primitive:
    """Convex grasp object in its local frame.

    shape: sphere (radius), cylinder (radius, height, axis local z),
    disk (cylinder with height < radius), box (half_extents).
    """

    shape: str
    radius: float = 0.0
    height: float = 0.0
    half_extents: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.shape not in ("sphere", "cylinder", "disk", "box"):
            raise GraspGeometryError(f"unknown primitive shape {self.shape!r}")
        if self.shape == "sphere" and self.radius <= 0:
            raise GraspGeometryError("sphere needs a positive radius")
        if self.shape in ("cylinder", "disk") and (self.radius <= 0 or self.height <= 0):
            raise GraspGeometryError(f"{self.shape} needs positive radius and height")
        if self.shape == "box" and any(h <= 0 for h in self.half_extents):
            raise GraspGeometryError("box needs positive half extents")

    def closest_point(self, p_local: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Closest surface point and the normal at it pointing toward p
        (for interior points: toward the nearest face, outward)."""
        p = np.asarray(p_local, dtype=float)
        if self.shape == "sphere":
            r = np.linalg.norm(p)
            if r < 1e-12:
                n = np.array([0.0, 0.0, 1.0])
            else:
                n = p / r
            return self.radius * n, n
        if self.shape in ("cylinder", "disk"):
            half_h = self.height / 2.0
            rad = float(np.hypot(p[0], p[1]))
            if rad < 1e-12:
                radial = np.array([1.0, 0.0, 0.0])
            else:
                radial = np.array([p[0] / rad, p[1] / rad, 0.0])
            inside_r = rad <= self.radius
            inside_h = abs(p[2]) <= half_h
            if inside_r and inside_h:
                # interior: pop to the nearest of lateral wall or caps
                d_wall = self.radius - rad
                d_cap = half_h - abs(p[2])
                if d_wall < d_cap:
                    n = radial
                    return np.array([self.radius * radial[0], self.radius * radial[1], p[2]]), n
                n = np.array([0.0, 0.0, np.sign(p[2]) if p[2] != 0 else 1.0])
                return np.array([p[0], p[1], np.sign(n[2]) * half_h]), n
            # outside: clamp to the solid, then direction from clamp
            clamped = np.array(
                [
                    radial[0] * min(rad, self.radius),
                    radial[1] * min(rad, self.radius),
                    np.clip(p[2], -half_h, half_h),
                ]
            )
            d = p - clamped
            dn = np.linalg.norm(d)
            n = d / dn if dn > 1e-12 else radial
            return clamped, n
        # box
        he = np.asarray(self.half_extents, dtype=float)
        inside = np.all(np.abs(p) <= he)
        if inside:
            gaps = he - np.abs(p)
            k = int(np.argmin(gaps))
            n = np.zeros(3)
            n[k] = np.sign(p[k]) if p[k] != 0 else 1.0
            surf = p.copy()
            surf[k] = n[k] * he[k]
            return surf, n
        clamped = np.clip(p, -he, he)
        d = p - clamped
        dn = np.linalg.norm(d)
        n = d / dn if dn > 1e-12 else np.array([0.0, 0.0, 1.0])
        return clamped, n

    def surface_distance(self, p_local: np.ndarray) -> float:
        surf, _ = self.closest_point(p_local)
        return float(np.linalg.norm(np.asarray(p_local) - surf))


@dataclass(frozen=True)
class Contact:
    keypoint: str
    point: np.ndarray  # world, on the surface
    normal: np.ndarray  # unit, from the surface toward the keypoint


@dataclass(frozen=True)
class ContactSet:
    contacts: tuple[Contact, ...]

    def __len__(self) -> int:
        return len(self.contacts)

    @property
    def keypoints(self) -> tuple[str, ...]:
        return tuple(c.keypoint for c in self.contacts)


@dataclass(frozen=True)
class AttachmentState:
    attached: bool
    grasp_keypoints: tuple[str, ...] = ()


def detect_contacts(
    keypoints: np.ndarray,
    primitive: Primitive,
    object_pose: np.ndarray,
    capture_distance: float = DEFAULT_CONTACT_DISTANCE,
) -> ContactSet:
    """Tip keypoints within ``capture_distance`` of the object surface."""
    if capture_distance <= 0:
        raise GraspGeometryError("capture distance must be positive")
    keypoints = np.asarray(keypoints, dtype=float)
    R = object_pose[:3, :3]
    t = object_pose[:3, 3]
    contacts = []
    for name in TIP_KEYPOINTS:
        p_world = keypoints[keypoint_index(name)]
        p_local = R.T @ (p_world - t)
        surf_local, n_local = primitive.closest_point(p_local)
        if np.linalg.norm(p_local - surf_local) <= capture_distance:
            contacts.append(
                Contact(keypoint=name, point=R @ surf_local + t, normal=R @ n_local)
            )
    return ContactSet(contacts=tuple(contacts))


def attachment(contacts: ContactSet, opposition_deg: float = OPPOSITION_ANGLE_DEG) -> AttachmentState:
    """Attached iff >= 2 contacts and some pair of normals subtends at
    least the opposition angle."""
    if len(contacts) < 2:
        return AttachmentState(attached=False)
    normals = np.array([c.normal for c in contacts.contacts])
    cos_thresh = np.cos(np.radians(opposition_deg))
    n = len(contacts)
    for i in range(n):
        for j in range(i + 1, n):
            if float(normals[i] @ normals[j]) <= cos_thresh + 1e-12:
                return AttachmentState(attached=True, grasp_keypoints=contacts.keypoints)
    return AttachmentState(attached=False)


@dataclass(frozen=True)
class RigidFit:
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)
    residual: float
    degenerate: bool  # two-point or collinear input: reduced-DoF, twist-free fit

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation


def _twist_free_rotation(d0: np.ndarray, d1: np.ndarray) -> np.ndarray:
    """Minimal rotation taking direction d0 to d1 (no spin about the axis)."""
    n0, n1 = np.linalg.norm(d0), np.linalg.norm(d1)
    if n0 < 1e-12 or n1 < 1e-12:
        return np.eye(3)
    u0, u1 = d0 / n0, d1 / n1
    axis = np.cross(u0, u1)
    s = np.linalg.norm(axis)
    c = float(np.clip(u0 @ u1, -1.0, 1.0))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # antiparallel: rotate pi about any perpendicular axis
        perp = np.cross(u0, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(u0, [0.0, 1.0, 0.0])
        perp = perp / np.linalg.norm(perp)
        return rotation_about_axis(perp, np.pi)
    return rotation_about_axis(axis / s, float(np.arctan2(s, c)))


def fit_rigid_motion(prev_points: np.ndarray, next_points: np.ndarray) -> RigidFit:
    """Least-squares rigid transform T with det(R) = +1 minimizing
    sum ||T(p_i) - p'_i||^2.

    Three or more non-collinear correspondences give the full pose; two
    points (or collinear sets) use the twist-free convention and are
    flagged degenerate.
    """
    A = np.asarray(prev_points, dtype=float)
    B = np.asarray(next_points, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[1] != 3 or A.shape[0] < 2:
        raise GraspGeometryError("need matched (n, 3) point sets with n >= 2")

    ca, cb = A.mean(axis=0), B.mean(axis=0)
    A0, B0 = A - ca, B - cb

    degenerate = False
    if A.shape[0] == 2:
        degenerate = True
        R = _twist_free_rotation(A[1] - A[0], B[1] - B[0])
    else:
        H = A0.T @ B0
        U, S, Vt = np.linalg.svd(H)
        # collinear source points: rank < 2 leaves a free spin
        if S[1] < 1e-12 * max(S[0], 1.0):
            degenerate = True
            R = _twist_free_rotation(A0[np.argmax(np.linalg.norm(A0, axis=1))],
                                     B0[np.argmax(np.linalg.norm(B0, axis=1))])
        else:
            d = np.sign(np.linalg.det(Vt.T @ U.T))
            R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = cb - R @ ca
    residual = float(np.sqrt(np.mean(np.sum((A @ R.T + t - B) ** 2, axis=1))))
    return RigidFit(rotation=R, translation=t, residual=residual, degenerate=degenerate)
