import numpy as np
import pytest

from pomdar.geometry import make_transform, rotation_about_axis, rotation_angle_between
from pomdar.hand import HandPose, default_model
from pomdar.retarget import (
    CalibrationError,
    CalibrationParams,
    RetargetConfig,
    RetargetError,
    WristPassthrough,
    calibrate,
    make_synthetic_poses,
    retarget,
    standard_pose_set,
)
from pomdar.retarget.calibration import load_calibration, save_calibration, CalibrationResult
from pomdar.retarget.solver import retarget_energy, retarget_energy_gradient


@pytest.fixture(scope="module")
def model():
    return default_model()


@pytest.fixture(scope="module")
def identity_params():
    return CalibrationParams()


EXACT_CFG = RetargetConfig(smoothness=0.0, max_nfev=100)


class TestRetarget:
    def test_fk_roundtrip(self, model, identity_params):
        rng = np.random.default_rng(42)
        emb = model.embodiment("hand_full")
        for _ in range(20):
            q_star = rng.uniform(model.lower, model.upper)
            kp = model.forward_kinematics(HandPose(q=q_star))
            res = retarget(identity_params, EXACT_CFG, model, emb, kp, np.zeros(16))
            assert np.max(np.abs(res.q - q_star)) < 1e-3

    def test_fixed_point(self, model, identity_params):
        rng = np.random.default_rng(1)
        emb = model.embodiment("hand_full")
        q_star = rng.uniform(model.lower, model.upper)
        kp = model.forward_kinematics(HandPose(q=q_star))
        res = retarget(identity_params, RetargetConfig(), model, emb, kp, q_star)
        np.testing.assert_allclose(res.q, q_star, atol=1e-9)
        assert res.energy <= res.initial_energy

    def test_locked_joints_exactly_zero(self, model, identity_params):
        rng = np.random.default_rng(2)
        emb = model.embodiment("hand_2")
        kp = model.forward_kinematics(HandPose(q=rng.uniform(model.lower, model.upper)))
        res = retarget(identity_params, RetargetConfig(), model, emb, kp, np.zeros(16))
        locked = emb.lock_mask
        assert np.all(res.q[locked] == 0.0)

    def test_objective_descent_over_stream(self, model, identity_params):
        rng = np.random.default_rng(3)
        emb = model.embodiment("hand_full")
        cfg = RetargetConfig()
        q_prev = np.zeros(16)
        for _ in range(20):
            q_target = rng.uniform(model.lower, model.upper)
            kp = model.forward_kinematics(HandPose(q=q_target))
            res = retarget(identity_params, cfg, model, emb, kp, q_prev)
            assert res.energy <= res.initial_energy + 1e-12
            assert not res.descent_violation
            q_prev = res.q

    def test_rejects_nonfinite_keypoints(self, model, identity_params):
        kp = np.zeros((22, 3))
        kp[5, 1] = np.nan
        with pytest.raises(RetargetError):
            retarget(identity_params, RetargetConfig(), model,
                     model.embodiment("hand_full"), kp, np.zeros(16))

    def test_gradient_matches_finite_differences(self, model, identity_params):
        rng = np.random.default_rng(4)
        emb = model.embodiment("hand_full")
        cfg = RetargetConfig()
        h = 1e-6
        for _ in range(10):
            kp = model.forward_kinematics(HandPose(q=rng.uniform(model.lower, model.upper)))
            q = rng.uniform(model.lower, model.upper)
            q_prev = rng.uniform(model.lower, model.upper)
            g = retarget_energy_gradient(identity_params, cfg, model, emb, kp, q_prev, q)
            g_fd = np.zeros(16)
            for j in range(16):
                qp, qm = q.copy(), q.copy()
                qp[j] += h
                qm[j] -= h
                g_fd[j] = (
                    retarget_energy(identity_params, cfg, model, emb, kp, q_prev, qp)
                    - retarget_energy(identity_params, cfg, model, emb, kp, q_prev, qm)
                ) / (2 * h)
            assert np.linalg.norm(g - g_fd) / max(np.linalg.norm(g), 1e-12) < 1e-4


class TestCalibration:
    def test_standard_set_has_seven_feasible_poses(self, model):
        poses = standard_pose_set(model)
        assert len(poses) == 7
        for p in poses:
            assert model.within_limits(p.q)

    def test_self_consistency(self, model):
        poses = standard_pose_set(model)
        res = calibrate(poses, model, budget=120, seed=0)
        assert 0.99 <= res.params.scale <= 1.01
        assert np.degrees(rotation_angle_between(res.params.rotation, np.eye(3))) < 2.0
        assert res.evaluations <= 120

    def test_budget_too_small_rejected(self, model):
        with pytest.raises(CalibrationError):
            calibrate(standard_pose_set(model), model, budget=0, seed=0)

    def test_degenerate_poses_rejected(self, model):
        poses = standard_pose_set(model)
        frozen = [type(p)(name=p.name, keypoints=poses[0].keypoints, q=p.q) for p in poses]
        with pytest.raises(CalibrationError):
            calibrate(frozen, model, budget=100, seed=0)

    def test_too_few_poses_rejected(self, model):
        with pytest.raises(CalibrationError):
            calibrate(standard_pose_set(model)[:2], model, budget=100, seed=0)

    def test_equivariance_under_known_rotation(self, model):
        # pre-rotating all glove data changes the recovered rotation by the
        # inverse composition
        R0 = rotation_about_axis(np.array([0.0, 0.0, 1.0]), np.radians(20.0))
        poses = make_synthetic_poses(model, 1.0, R0)
        res = calibrate(poses, model, budget=150, seed=5)
        assert np.degrees(rotation_angle_between(res.params.rotation, R0.T)) < 2.0
        assert abs(res.params.scale - 1.0) < 0.01

    def test_result_file_roundtrip(self, model, tmp_path):
        params = CalibrationParams(
            scale=1.25, rotation=rotation_about_axis(np.array([0, 1.0, 0]), 0.4)
        )
        res = CalibrationResult(params=params, objective=0.125, seed=3, budget=200,
                                evaluations=180)
        path = tmp_path / "calib.json"
        save_calibration(res, path)
        back = load_calibration(path)
        assert back.params.scale == pytest.approx(1.25, abs=1e-12)
        assert rotation_angle_between(back.params.rotation, params.rotation) < 1e-9
        assert back.seed == 3 and back.budget == 200


class TestWristPassthrough:
    def test_reference_maps_to_identity(self):
        wp = WristPassthrough("free")
        pose = make_transform(rotation_about_axis(np.array([0, 0, 1.0]), 0.7),
                              np.array([0.2, 0.1, -0.3]))
        np.testing.assert_allclose(wp(pose), np.eye(4), atol=1e-12)

    def test_vertical_keeps_only_z_translation(self):
        wp = WristPassthrough("vertical")
        ref = np.eye(4)
        wp(ref)
        moved = make_transform(rotation_about_axis(np.array([1.0, 0, 0]), 0.3),
                               np.array([0.1, 0.2, 0.3]))
        out = wp(moved)
        np.testing.assert_allclose(out[:3, :3], np.eye(3), atol=1e-12)
        np.testing.assert_allclose(out[:3, 3], [0, 0, 0.3], atol=1e-12)

    def test_fixed_always_identity(self):
        wp = WristPassthrough("fixed")
        rng = np.random.default_rng(0)
        for _ in range(5):
            pose = make_transform(
                rotation_about_axis(np.array([0, 1.0, 0]), rng.uniform(-1, 1)),
                rng.uniform(-1, 1, 3),
            )
            np.testing.assert_allclose(wp(pose), np.eye(4), atol=1e-12)

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValueError):
            WristPassthrough("diagonal")
