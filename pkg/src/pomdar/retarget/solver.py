"""Joint-space retargeting by constrained nonlinear least squares.

Minimizes

    E(q) = sum_i w_i ||v_i(q) - s R u_i||^2 + lambda ||q - q_prev||^2

over the embodiment's unlocked joints within their limits, where v_i are
the model keyvectors at q and u_i the same keyvectors of the input
keypoint set. Locked joints are held at exactly zero. The solve is
warm-started at q_prev and never returns a higher energy than it started
with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ..hand import Embodiment, HandModel, HandPose
from .features import RetargetConfig, feature_jacobian, feature_vectors


class RetargetError(ValueError):
    """Rejected retargeting input."""


@dataclass(frozen=True)
class RetargetResult:
    q: np.ndarray
    energy: float
    initial_energy: float
    nfev: int
    descent_violation: bool  # solver ended above the warm-start energy (diagnostic)

    @property
    def descended(self) -> bool:
        return self.energy <= self.initial_energy


def _energy_terms(model, cfg, q, target, sqrt_w, q_prev, sqrt_lam, free):
    kp = model.forward_kinematics(HandPose(q=q))
    res_f = (feature_vectors(kp, cfg) - target) * sqrt_w[:, None]
    res_s = sqrt_lam * (q[free] - q_prev[free])
    return np.concatenate([res_f.ravel(), res_s])


def retarget(
    params,
    cfg: RetargetConfig,
    model: HandModel,
    embodiment: Embodiment,
    keypoints: np.ndarray,
    q_prev: np.ndarray,
) -> RetargetResult:
    """One energy-minimization solve; see module docstring.

    ``params`` carries the calibration scale and rotation applied to the
    input keyvectors. ``keypoints`` is the wrist-relative (22, 3) input.
    """
    keypoints = np.asarray(keypoints, dtype=float)
    if keypoints.shape != (22, 3) or not np.all(np.isfinite(keypoints)):
        raise RetargetError("keypoints must be a finite (22, 3) array")
    q_prev = model.clamp_to_limits(embodiment.apply(np.asarray(q_prev, dtype=float)))

    target = feature_vectors(keypoints, cfg) @ (params.scale * params.rotation).T
    sqrt_w = np.sqrt(cfg.weight_array)
    sqrt_lam = np.sqrt(cfg.smoothness)
    free = ~embodiment.lock_mask
    n_free = int(free.sum())

    def expand(x):
        q = np.zeros(model.joint_count)
        q[free] = x
        return q

    def residuals(x):
        return _energy_terms(model, cfg, expand(x), target, sqrt_w, q_prev, sqrt_lam, free)

    def jacobian(x):
        J_kp = model.keypoint_jacobian(expand(x))
        J_f = feature_jacobian(J_kp, cfg)[:, :, free] * sqrt_w[:, None, None]
        rows = J_f.reshape(-1, n_free)
        smooth = np.eye(n_free) * sqrt_lam
        return np.vstack([rows, smooth])

    x0 = q_prev[free]
    r0 = residuals(x0)
    e0 = float(r0 @ r0)

    if n_free == 0:
        return RetargetResult(q=expand(x0), energy=e0, initial_energy=e0, nfev=1,
                              descent_violation=False)

    sol = least_squares(
        residuals,
        x0,
        jac=jacobian,
        bounds=(model.lower[free], model.upper[free]),
        method="trf",
        max_nfev=cfg.max_nfev,
        xtol=cfg.tol,
        ftol=cfg.tol,
        gtol=cfg.tol,
    )
    e1 = float(2.0 * sol.cost)
    if e1 > e0:
        # trust-region solves are monotone from x0; keep the guarantee anyway
        return RetargetResult(q=expand(x0), energy=e0, initial_energy=e0,
                              nfev=int(sol.nfev), descent_violation=True)
    return RetargetResult(q=expand(sol.x), energy=e1, initial_energy=e0,
                          nfev=int(sol.nfev), descent_violation=False)


def retarget_energy(params, cfg, model, embodiment, keypoints, q_prev, q) -> float:
    """Energy E(q) for diagnostics and tests."""
    keypoints = np.asarray(keypoints, dtype=float)
    q = np.asarray(q, dtype=float)
    q_prev = model.clamp_to_limits(embodiment.apply(np.asarray(q_prev, dtype=float)))
    target = feature_vectors(keypoints, cfg) @ (params.scale * params.rotation).T
    free = ~embodiment.lock_mask
    r = _energy_terms(model, cfg, q, target, np.sqrt(cfg.weight_array), q_prev,
                      np.sqrt(cfg.smoothness), free)
    return float(r @ r)


def retarget_energy_gradient(params, cfg, model, embodiment, keypoints, q_prev, q) -> np.ndarray:
    """Analytic gradient of E over the unlocked coordinates."""
    keypoints = np.asarray(keypoints, dtype=float)
    q = np.asarray(q, dtype=float)
    q_prev = model.clamp_to_limits(embodiment.apply(np.asarray(q_prev, dtype=float)))
    target = feature_vectors(keypoints, cfg) @ (params.scale * params.rotation).T
    free = ~embodiment.lock_mask
    sqrt_w = np.sqrt(cfg.weight_array)
    sqrt_lam = np.sqrt(cfg.smoothness)
    r = _energy_terms(model, cfg, q, target, sqrt_w, q_prev, sqrt_lam, free)
    J_kp = model.keypoint_jacobian(q)
    J_f = feature_jacobian(J_kp, cfg)[:, :, free] * sqrt_w[:, None, None]
    J = np.vstack([J_f.reshape(-1, int(free.sum())), np.eye(int(free.sum())) * sqrt_lam])
    return 2.0 * (J.T @ r)
