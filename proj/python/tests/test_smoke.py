import numpy as np
import pytest

import twinforge as tf


@pytest.fixture(scope="module")
def arm():
    return tf.ArmModel.reference_arm()


def test_forward_kinematics_reference_pose(arm):
    q = np.array([0.0, 0.7, 1.1, 0.6, 0.0])
    p = tf.forward_kinematics(arm, q)
    assert p == pytest.approx([0.4249, 0.0, 0.1469], abs=1e-3)
    assert tf.forward_kinematics(arm, np.zeros(5))[2] == pytest.approx(0.7, abs=1e-12)


def test_jacobian_matches_finite_differences(arm):
    q = np.array([0.3, 0.5, -0.4, 0.8, -0.2])
    J = tf.jacobian(arm, q)
    assert J.shape == (3, 5)
    h = 1e-7
    for j in range(5):
        dq = np.zeros(5)
        dq[j] = h
        fd = (tf.forward_kinematics(arm, q + dq) - tf.forward_kinematics(arm, q - dq)) / (2 * h)
        assert np.linalg.norm(J[:, j] - fd) < 1e-5


def test_ik_round_trip(arm):
    q = np.array([0.2, 0.6, 0.9, 0.4, -0.1])
    target = tf.forward_kinematics(arm, q)
    res = tf.solve_ik(arm, target, np.zeros(5))
    assert res.success
    assert res.residual <= 1e-4
    assert np.linalg.norm(tf.forward_kinematics(arm, res.q) - target) <= 1e-4


def test_scene_sampling_and_collision(arm):
    setup = tf.default_setup()
    scene = tf.sample_scene(42, setup.scene_params)
    b = setup.scene_params.bounds
    assert b.lo[0] <= scene.goal_pos[0] <= b.hi[0]
    assert len(scene.obstacles) == 1
    pair = tf.scene_closest(arm, setup.start_q, scene)
    assert pair.distance > 0.0
    assert not tf.in_collision(arm, setup.start_q, scene)
    # same seed, same scene
    again = tf.sample_scene(42, setup.scene_params)
    assert np.allclose(scene.goal_pos, again.goal_pos)


def test_env_episode_with_straight_line_controller(arm):
    setup = tf.default_setup()
    scene = tf.Scene()
    scene.workspace_bounds = setup.scene_params.bounds
    scene.goal_pos = np.array([0.38, 0.10, 0.025])
    scene.obstacles = [tf.BoxObstacle(np.array([0.30, -0.08, 0.03]), np.array([0.03, 0.03, 0.03]))]

    env = tf.Env(arm, setup.env_config)
    obs = env.reset(scene, setup.start_q)
    assert obs.shape == (17,)
    assert obs[0] == 0.0

    total = 0.0
    for _ in range(setup.env_config.horizon):
        tcp = obs[3:6]
        action = scene.goal_pos - tcp
        obs, reward, terminated, truncated, info = env.step(action)
        total += reward
        assert reward == pytest.approx(
            info["r_g"] + 0.1 * info["r_a"] + info["r_o"], abs=1e-12
        )
        if terminated or truncated:
            break
    assert env.flag_task() == 1
    assert env.flag_safe() == 1
    assert total > 0.0


def test_perception_mapping_constants():
    calib = tf.Calibration()
    corner = tf.pixel_to_world(660.0, 540.0, calib)
    assert corner == pytest.approx([-0.482, 0.587, 0.025], abs=0)
    back = tf.world_to_pixel(corner, calib)
    assert back == pytest.approx([660.0, 540.0], abs=1e-9)

    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    H = tf.homography_from_corners(square, square + np.array([2.0, -1.0]))
    assert tf.apply_homography(H, np.array([0.5, 0.5])) == pytest.approx([2.5, -0.5], abs=1e-9)


def test_tiny_training_and_checkpoint_round_trip(tmp_path):
    setup = tf.default_setup()
    setup.env_config.horizon = 30
    cfg = tf.LearnerConfig()
    cfg.hidden = 8
    cfg.rollout_steps = 64
    cfg.minibatch = 32
    cfg.epochs = 2
    cfg.eval_interval = 64
    cfg.eval_episodes = 2
    cfg.total_steps = 128
    res = tf.train(setup, cfg, str(tmp_path))
    assert res.steps_run == 128
    assert len(res.curve) >= 1
    assert (tmp_path / "best.tfck").exists()

    ckpt = tf.load_checkpoint(str(tmp_path / "best.tfck"))
    stats = tf.evaluate(setup, ckpt, episodes=2, seed=0)
    assert stats.mean_reward == pytest.approx(ckpt.mean_eval_reward, abs=1e-9)

    obs = np.zeros(17)
    a = ckpt.act(obs, a_max=setup.env_config.a_max)
    assert a.shape == (3,)
    assert np.all(np.abs(a) <= setup.env_config.a_max)
