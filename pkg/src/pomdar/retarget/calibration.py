"""One-time fit of the global scale and rotation mapping operator
keypoints into the hand model frame.

The search is derivative-free: a seeded differential-evolution sweep over
(scale, rotation-vector) followed by a Nelder-Mead refinement, all under a
hard objective-evaluation budget. The objective is the joint-space error
of retargeting each calibration pose against its ground-truth joints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeResult, differential_evolution, minimize

from ..geometry import matrix_to_quat, quat_to_matrix, rotvec_to_matrix
from ..hand import HandModel, HandPose
from .features import RetargetConfig
from .solver import retarget

CALIBRATION_FORMAT_VERSION = 1

SCALE_BOUNDS = (0.5, 2.0)
ROTVEC_BOUND = np.pi


class CalibrationError(ValueError):
    """Rejected calibration input."""


@dataclass(frozen=True)
class CalibrationParams:
    """Scale s > 0 and rotation R applied to operator keyvectors."""

    scale: float = 1.0
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        if self.scale <= 0:
            raise CalibrationError("scale must be positive")
        if R.shape != (3, 3) or np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9 or np.linalg.det(R) < 0:
            raise CalibrationError("rotation must be a proper orthonormal 3x3 matrix")
        object.__setattr__(self, "rotation", R)


@dataclass(frozen=True)
class CalibrationPose:
    """Wrist-relative glove keypoints paired with ground-truth joints."""

    name: str
    keypoints: np.ndarray  # (22, 3) meters
    q: np.ndarray  # (16,) radians

    def __post_init__(self):
        object.__setattr__(self, "keypoints", np.asarray(self.keypoints, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if self.keypoints.shape != (22, 3):
            raise CalibrationError(f"pose {self.name}: keypoints must be (22, 3)")
        if self.q.shape != (16,):
            raise CalibrationError(f"pose {self.name}: q must have 16 joints")


@dataclass(frozen=True)
class CalibrationResult:
    params: CalibrationParams
    objective: float
    seed: int
    budget: int
    evaluations: int


#: Joint vectors of the standard seven calibration postures: four pinches,
#: hand open with and without abduction, and a closed hand.
_STANDARD_POSES: dict[str, dict[str, float]] = {
    "pinch_index": {
        "thumb_abd": -0.25, "thumb_cmc": 0.87, "thumb_mcp": 0.61, "thumb_ip": 0.57,
        "index_abd": 0.23, "index_mcp": 0.74, "index_pip": 1.06,
    },
    "pinch_middle": {
        "thumb_abd": -0.05, "thumb_cmc": 1.0, "thumb_mcp": 0.7, "thumb_ip": 0.6,
        "middle_mcp": 0.8, "middle_pip": 1.1,
    },
    "pinch_ring": {
        "thumb_abd": 0.1, "thumb_cmc": 1.15, "thumb_mcp": 0.75, "thumb_ip": 0.65,
        "ring_mcp": 0.9, "ring_pip": 1.15,
    },
    "pinch_pinky": {
        "thumb_abd": 0.25, "thumb_cmc": 1.3, "thumb_mcp": 0.8, "thumb_ip": 0.7,
        "pinky_mcp": 1.0, "pinky_pip": 1.2,
    },
    "open_flat": {},
    "open_spread": {
        "thumb_abd": 0.45, "index_abd": 0.25, "middle_abd": 0.05,
        "ring_abd": -0.12, "pinky_abd": -0.3,
    },
    "closed_fist": {
        "thumb_cmc": 1.1, "thumb_mcp": 0.9, "thumb_ip": 1.0,
        "index_mcp": 1.35, "index_pip": 1.6, "middle_mcp": 1.35, "middle_pip": 1.6,
        "ring_mcp": 1.35, "ring_pip": 1.6, "pinky_mcp": 1.35, "pinky_pip": 1.6,
    },
}


def standard_pose_set(model: HandModel) -> list[CalibrationPose]:
    """The seven standard postures with model-generated keypoints."""
    poses = []
    for name, angles in _STANDARD_POSES.items():
        q = np.zeros(model.joint_count)
        for jn, val in angles.items():
            q[model.joint_index[jn]] = val
        q = model.clamp_to_limits(q)
        kp = model.forward_kinematics(HandPose(q=q))
        poses.append(CalibrationPose(name=name, keypoints=kp, q=q))
    return poses


def make_synthetic_poses(model: HandModel, scale: float, rotation: np.ndarray,
                         noise: float = 0.0, seed: int = 0) -> list[CalibrationPose]:
    """Distort the standard poses the way a differently-sized, differently-
    oriented glove frame would: k -> scale * rotation @ k."""
    rng = np.random.default_rng(seed)
    out = []
    for pose in standard_pose_set(model):
        kp = scale * pose.keypoints @ np.asarray(rotation).T
        if noise > 0:
            kp = kp + rng.normal(0.0, noise, kp.shape)
        out.append(CalibrationPose(name=pose.name, keypoints=kp, q=pose.q))
    return out


def calibration_objective(x: np.ndarray, poses, model, cfg, embodiment) -> float:
    s = float(x[0])
    R = rotvec_to_matrix(np.asarray(x[1:4]))
    params = CalibrationParams(scale=s, rotation=R)
    total = 0.0
    for pose in poses:
        result = retarget(params, cfg, model, embodiment, pose.keypoints, pose.q)
        d = result.q - pose.q
        total += float(d @ d)
    return total


def keyvector_alignment_seed(poses, model: HandModel, cfg: RetargetConfig) -> np.ndarray:
    """Closed-form scaled-Kabsch alignment of glove keyvectors onto model
    keyvectors, used to seed the derivative-free search."""
    from .features import feature_vectors, model_features

    U = np.vstack([feature_vectors(p.keypoints, cfg) for p in poses])
    V = np.vstack([model_features(model, p.q, cfg) for p in poses])
    H = U.T @ V
    Uh, _, Vht = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vht.T @ Uh.T))
    R = Vht.T @ np.diag([1.0, 1.0, d]) @ Uh.T
    denom = float(np.sum(U * U))
    s = float(np.sum(V * (U @ R.T))) / denom if denom > 0 else 1.0
    s = float(np.clip(s, *SCALE_BOUNDS))
    rv = matrix_to_rotvec_bounded(R)
    return np.array([s, rv[0], rv[1], rv[2]])


def matrix_to_rotvec_bounded(R: np.ndarray) -> np.ndarray:
    from ..geometry import matrix_to_rotvec

    rv = matrix_to_rotvec(R)
    return np.clip(rv, -ROTVEC_BOUND, ROTVEC_BOUND)


def calibrate(
    poses: list[CalibrationPose],
    model: HandModel,
    cfg: RetargetConfig | None = None,
    budget: int = 300,
    seed: int = 0,
) -> CalibrationResult:
    """Fit (s, R) minimizing summed joint-space retargeting error.

    Deterministic for a fixed seed; never exceeds ``budget`` objective
    evaluations.
    """
    if len(poses) < 3:
        raise CalibrationError("need at least 3 calibration poses")
    if budget < 50:
        raise CalibrationError("budget must be at least 50 evaluations")
    stacked = np.stack([p.keypoints for p in poses])
    if np.max(np.abs(stacked - stacked[0])) < 1e-12:
        raise CalibrationError("degenerate calibration set: all poses identical")

    cfg = cfg or RetargetConfig()
    embodiment = model.embodiment("hand_full")

    evals = 0

    def objective(x):
        nonlocal evals
        evals += 1
        return calibration_objective(x, poses, model, cfg, embodiment)

    bounds = [SCALE_BOUNDS, (-ROTVEC_BOUND, ROTVEC_BOUND), (-ROTVEC_BOUND, ROTVEC_BOUND),
              (-ROTVEC_BOUND, ROTVEC_BOUND)]
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    # Global sweep (~35% of budget): seeded Latin-hypercube population with
    # the closed-form keyvector alignment injected as one member.
    seed_point = keyvector_alignment_seed(poses, model, cfg)
    popsize = 5
    pop_total = popsize * 4
    generations = max(1, int(budget * 0.35 / pop_total) - 1)
    rng = np.random.default_rng(seed)
    init = lo + rng.random((pop_total, 4)) * (hi - lo)
    init[0] = seed_point
    de: OptimizeResult = differential_evolution(
        objective,
        bounds=bounds,
        seed=seed,
        popsize=popsize,
        maxiter=generations,
        init=init,
        tol=1e-12,
        polish=False,
        updating="immediate",
    )

    remaining = budget - evals
    best_x, best_f = de.x, float(de.fun)
    if remaining > 10:
        nm = minimize(
            objective,
            best_x,
            method="Nelder-Mead",
            options={"maxfev": remaining, "xatol": 1e-10, "fatol": 1e-16},
        )
        if nm.fun < best_f:
            best_x, best_f = nm.x, float(nm.fun)

    best_x = np.clip(best_x, [b[0] for b in bounds], [b[1] for b in bounds])
    params = CalibrationParams(scale=float(best_x[0]), rotation=rotvec_to_matrix(best_x[1:4]))
    return CalibrationResult(params=params, objective=best_f, seed=seed, budget=budget,
                             evaluations=evals)


# ----------------------------------------------------------------------
# File formats
# ----------------------------------------------------------------------

def save_calibration(result: CalibrationResult, path) -> None:
    data = {
        "format_version": CALIBRATION_FORMAT_VERSION,
        "scale": result.params.scale,
        "quaternion": [float(v) for v in matrix_to_quat(result.params.rotation)],
        "objective": result.objective,
        "seed": result.seed,
        "budget": result.budget,
        "evaluations": result.evaluations,
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def load_calibration(path) -> CalibrationResult:
    with open(path) as f:
        data = json.load(f)
    version = data.get("format_version")
    if version != CALIBRATION_FORMAT_VERSION:
        raise CalibrationError(
            f"unsupported calibration format_version {version!r} (expected {CALIBRATION_FORMAT_VERSION})"
        )
    params = CalibrationParams(scale=float(data["scale"]),
                               rotation=quat_to_matrix(np.asarray(data["quaternion"], float)))
    return CalibrationResult(params=params, objective=float(data["objective"]),
                             seed=int(data["seed"]), budget=int(data["budget"]),
                             evaluations=int(data.get("evaluations", 0)))


def save_pose_set(poses: list[CalibrationPose], path) -> None:
    data = {
        "format_version": CALIBRATION_FORMAT_VERSION,
        "poses": [
            {
                "name": p.name,
                "keypoints": [[float(v) for v in row] for row in p.keypoints],
                "q": [float(v) for v in p.q],
            }
            for p in poses
        ],
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def load_pose_set(path) -> list[CalibrationPose]:
    with open(path) as f:
        data = json.load(f)
    version = data.get("format_version")
    if version != CALIBRATION_FORMAT_VERSION:
        raise CalibrationError(
            f"unsupported pose set format_version {version!r} (expected {CALIBRATION_FORMAT_VERSION})"
        )
    return [
        CalibrationPose(name=d["name"], keypoints=np.asarray(d["keypoints"], float),
                        q=np.asarray(d["q"], float))
        for d in data["poses"]
    ]
