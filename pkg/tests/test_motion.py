"""Goal-seeking motion model: steps, rollouts, stride likelihoods."""

import math

import numpy as np
import pytest

from intenttrack.filtering import trajectory_likelihood
from intenttrack.motion import (
    GilmParams,
    GoalKind,
    GoalRegion,
    ObservationWindow,
    estimate_speed,
    fr_goal_region,
    gilm_likelihood,
    gilm_log_likelihood,
    gilm_rollout,
    gilm_step,
)

DT = 1.0 / 30.0


def goal_at(x, y, sigma=0.025):
    return GoalRegion(np.array([x, y]), sigma**2 * np.eye(2))


def params(sigma=0.005, backprop=False, window=15):
    return GilmParams(window, sigma**2 * np.eye(2), backprop)


def window_from(points, dt=DT, ee=None):
    points = np.asarray(points, dtype=float)
    n = len(points)
    ts = dt * np.arange(1, n + 1)
    ee_arr = np.tile(ee if ee is not None else [0.8, 0.6], (n, 1))
    return ObservationWindow(ts, points, ee_arr)


# -- speed estimation ----------------------------------------------------------


def test_estimate_speed_uniform_spacing():
    pts = np.stack([np.arange(10) * 0.01, np.zeros(10)], axis=1)
    assert estimate_speed(window_from(pts), params()) == pytest.approx(0.3)


def test_estimate_speed_stationary():
    pts = np.tile([0.3, 0.3], (10, 1))
    assert estimate_speed(window_from(pts), params()) == 0.0


def test_estimate_speed_needs_two_samples():
    with pytest.raises(ValueError):
        estimate_speed(window_from([[0.0, 0.0]][:1]), params())


def test_estimate_speed_uses_recent_window_only():
    # Fast early motion, stationary in the window: should read 0.
    pts = np.vstack([np.stack([np.arange(10) * 0.05, np.zeros(10)], axis=1),
                     np.tile([0.45, 0.0], (6, 1))])
    assert estimate_speed(window_from(pts), params(window=5)) == pytest.approx(0.0)


# -- single step ----------------------------------------------------------------


def test_gilm_step_unit_step_along_direction():
    out = gilm_step(np.zeros(2), goal_at(3.0, 4.0), 1.0, 1.0)
    assert np.allclose(out, [0.6, 0.8])


def test_gilm_step_at_goal_is_identity():
    x = np.array([0.2, 0.3])
    out = gilm_step(x, GoalRegion(x.copy(), 1e-4 * np.eye(2)), 0.5, DT)
    assert np.array_equal(out, x)


def test_gilm_step_zero_speed():
    x = np.array([0.2, 0.3])
    assert np.array_equal(gilm_step(x, goal_at(0.5, 0.5), 0.0, DT), x)


def test_gilm_step_applies_noise_sample():
    out = gilm_step(np.zeros(2), goal_at(1.0, 0.0), 1.0, DT, noise=np.array([0.0, 0.01]))
    assert out[1] == pytest.approx(0.01)


def test_gilm_step_rejects_negative_speed():
    with pytest.raises(ValueError):
        gilm_step(np.zeros(2), goal_at(1.0, 0.0), -1.0, DT)


def test_gilm_step_distance_decreases_when_not_overshooting():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.uniform(0, 1, 2)
        g = goal_at(*rng.uniform(0, 1, 2))
        dist = np.linalg.norm(g.mean - x)
        step = rng.uniform(0, 0.9) * dist
        if dist < 1e-6:
            continue
        out = gilm_step(x, g, step, 1.0)
        assert np.linalg.norm(g.mean - out) < dist


# -- rollout ---------------------------------------------------------------------


def test_rollout_single_step_cov():
    means, covs = gilm_rollout(np.zeros(2), goal_at(0.5, 0.0), 0.24, 1, params(0.005), DT)
    assert covs.shape == (1, 2, 2)
    assert np.allclose(covs[0], 0.005**2 * np.eye(2))


def test_rollout_covariance_accumulates():
    _, covs = gilm_rollout(np.zeros(2), goal_at(0.5, 0.0), 0.24, 3, params(0.005), DT)
    assert np.allclose(covs[2], 3 * 0.005**2 * np.eye(2))


def test_rollout_goal_backprop_adds_goal_cov():
    g = goal_at(0.5, 0.0, sigma=0.02)
    _, covs = gilm_rollout(np.zeros(2), g, 0.24, 2, params(0.005, backprop=True), DT)
    assert np.allclose(covs[1], 2 * (0.005**2 * np.eye(2) + g.cov))


def test_rollout_means_match_iterated_steps():
    g = goal_at(0.4, 0.3)
    means, _ = gilm_rollout(np.array([0.1, 0.1]), g, 0.24, 4, params(), DT)
    x = np.array([0.1, 0.1])
    for i in range(4):
        x = gilm_step(x, g, 0.24, DT)
        assert np.allclose(means[i], x)


def test_rollout_mean_matches_monte_carlo():
    # Oracle: iterate the noisy step 1e5 times; the noiseless rollout mean
    # must sit within 3 standard errors of the sample mean, per component.
    rng = np.random.default_rng(42)
    n, horizon, sigma, speed = 100_000, 3, 0.005, 0.24
    x0 = np.array([0.10, 0.12])
    g = goal_at(0.50, 0.42)
    pts = np.tile(x0, (n, 1))
    sample_means = []
    for _ in range(horizon):
        delta = g.mean - pts
        dist = np.linalg.norm(delta, axis=1, keepdims=True)
        pts = pts + speed * DT * delta / dist + rng.normal(0, sigma, size=(n, 2))
        sample_means.append(pts.mean(axis=0))
    means, _ = gilm_rollout(x0, g, speed, horizon, params(sigma), DT)
    for tau in range(horizon):
        se = pts.std(axis=0, ddof=1) / math.sqrt(n)
        assert np.all(np.abs(means[tau] - sample_means[tau]) < 3 * se + 1e-12)


# -- stride likelihood ------------------------------------------------------------


def _loglik_by_hand(obs, x0, goal, speed, p, dt=DT):
    total = 0.0
    x = x0.copy()
    inc = p.process_noise_cov + (goal.cov if p.goal_backprop else 0.0)
    for tau, point in enumerate(obs, start=1):
        x = gilm_step(x, goal, speed, dt)
        cov = tau * inc
        r = point - x
        total += -math.log(2 * math.pi) - 0.5 * math.log(np.linalg.det(cov))
        total += -0.5 * float(r @ np.linalg.inv(cov) @ r)
    return total


def test_gilm_likelihood_single_step_is_one_gaussian():
    p = params(0.005)
    g = goal_at(0.5, 0.1)
    pts = [[0.1, 0.1], [0.108, 0.1], [0.116, 0.1], [0.124, 0.101]]
    w = window_from(pts)
    speed = estimate_speed(window_from(pts[:-1]), p)
    expected = _loglik_by_hand(np.array(pts[-1:]), np.array(pts[-2]), g, speed, p)
    assert gilm_log_likelihood(w, g, 1, p) == pytest.approx(expected)
    assert gilm_likelihood(w, g, 1, p) == pytest.approx(math.exp(expected))


def test_gilm_likelihood_true_goal_wins_on_synthetic_track():
    rng = np.random.default_rng(17)
    goals = {
        "a": goal_at(0.32, 0.50),
        "b": goal_at(0.58, 0.50),
        "c": goal_at(0.32, 0.35),
        "d": goal_at(0.58, 0.35),
        "e": goal_at(0.45, 0.62),
    }
    p = params(0.006)
    x = np.array([0.45, 0.10])
    pts = [x.copy()]
    for _ in range(10 + 5):
        x = gilm_step(x, goals["c"], 0.25, DT, rng.normal(0, 0.002, 2))
        pts.append(x.copy())
    w = window_from(pts)
    scores = {k: gilm_log_likelihood(w, g, 5, p) for k, g in goals.items()}
    assert max(scores, key=scores.get) == "c"


def test_gilm_likelihood_observations_on_rollout_means_maximal():
    p = params(0.006)
    goals = [goal_at(0.32, 0.50), goal_at(0.58, 0.50), goal_at(0.32, 0.35),
             goal_at(0.58, 0.35), goal_at(0.45, 0.62)]
    start = np.array([0.40, 0.20])
    warm = [start + [0, -0.008 * i] for i in range(4, 0, -1)] + [start]
    speed = 0.008 / DT
    true_goal = goals[1]
    x = start.copy()
    obs = []
    for _ in range(5):
        x = gilm_step(x, true_goal, speed, DT)
        obs.append(x.copy())
    w = window_from(np.vstack([warm, obs]))
    scores = [gilm_log_likelihood(w, g, 5, p) for g in goals]
    assert int(np.argmax(scores)) == 1


def test_gilm_likelihood_translation_invariance():
    p = params(0.004)
    pts = np.array([[0.1, 0.1], [0.11, 0.1], [0.12, 0.11], [0.13, 0.11], [0.14, 0.12]])
    g = goal_at(0.5, 0.3)
    base = gilm_log_likelihood(window_from(pts), g, 2, p)
    shift = np.array([0.17, -0.05])
    g2 = GoalRegion(g.mean + shift, g.cov)
    moved = gilm_log_likelihood(window_from(pts + shift), g2, 2, p)
    assert moved == pytest.approx(base, rel=1e-12)


def test_gilm_likelihood_rotation_invariance():
    p = params(0.004)
    pts = np.array([[0.1, 0.1], [0.11, 0.1], [0.12, 0.11], [0.13, 0.11], [0.14, 0.12]])
    g = goal_at(0.5, 0.3)
    base = gilm_log_likelihood(window_from(pts), g, 2, p)
    th = 0.73
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    center = np.array([0.3, 0.2])
    rot_pts = (pts - center) @ rot.T + center
    g2 = GoalRegion((g.mean - center) @ rot.T + center, g.cov)
    rotated = gilm_log_likelihood(window_from(rot_pts), g2, 2, p)
    assert rotated == pytest.approx(base, rel=1e-9)


def test_gilm_likelihood_window_too_short():
    pts = np.array([[0.1, 0.1], [0.11, 0.1]])
    with pytest.raises(ValueError):
        gilm_log_likelihood(window_from(pts), goal_at(0.5, 0.3), 2, params())


def test_gilm_likelihood_singular_cov_regularized():
    p = GilmParams(15, np.zeros((2, 2)))  # zero process noise -> singular
    pts = np.array([[0.1, 0.1], [0.11, 0.1], [0.12, 0.11], [0.13, 0.11]])
    val = gilm_log_likelihood(window_from(pts), goal_at(0.5, 0.3), 1, p)
    assert math.isfinite(val)


def test_stride_density_matches_monte_carlo_marginals():
    # Oracle: Rao-Blackwellized Monte-Carlo estimate of each per-step
    # marginal density (1e6 rollout paths), compared with the Gaussian
    # marginals the stride likelihood multiplies together.
    rng = np.random.default_rng(99)
    n, horizon, sigma, speed = 1_000_000, 3, 0.005, 0.24
    x0 = np.array([0.10, 0.12])
    g = goal_at(0.55, 0.48)
    p = params(sigma)

    means, covs = gilm_rollout(x0, g, speed, horizon, p, DT)
    obs = means + np.array([[0.003, -0.002], [-0.004, 0.004], [0.005, 0.002]])

    pts = np.tile(x0, (n, 1))
    mc = []
    norm = 1.0 / (2 * math.pi * sigma**2)
    for tau in range(horizon):
        delta = g.mean - pts
        dist = np.linalg.norm(delta, axis=1, keepdims=True)
        centers = pts + speed * DT * delta / dist
        d2 = ((obs[tau] - centers) ** 2).sum(axis=1)
        mc.append(float(np.mean(norm * np.exp(-d2 / (2 * sigma**2)))))
        pts = centers + rng.normal(0, sigma, size=(n, 2))

    def model_density(tau, x):
        cov = covs[tau - 1]
        r = x - means[tau - 1]
        det = np.linalg.det(cov)
        return float(np.exp(-0.5 * r @ np.linalg.inv(cov) @ r) / (2 * math.pi * math.sqrt(det)))

    product_model = trajectory_likelihood(obs, model_density, horizon)
    product_mc = float(np.prod(mc))
    assert product_model == pytest.approx(product_mc, rel=0.10)
    # The package stride likelihood multiplies exactly these marginals.
    w = window_from(np.vstack([[x0 - [0.008, 0], x0], obs]))
    assert gilm_likelihood(w, g, horizon, p) == pytest.approx(product_model, rel=1e-6)


# -- goal regions -----------------------------------------------------------------


def test_fr_region_centers_on_robot():
    r = fr_goal_region(np.array([0.4, 0.2]), 0.03**2 * np.eye(2))
    assert np.allclose(r.mean, [0.4, 0.2])
    assert r.kind is GoalKind.FOLLOW_ROBOT


def test_fr_region_tracks_moves():
    cov = 0.03**2 * np.eye(2)
    a = fr_goal_region(np.array([0.4, 0.2]), cov)
    b = fr_goal_region(np.array([0.5, 0.1]), cov)
    assert np.allclose(b.mean - a.mean, [0.1, -0.1])


def test_goal_region_validation():
    with pytest.raises(ValueError):
        GoalRegion(np.zeros(2), np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        GoalRegion(np.zeros(2), np.array([[-1.0, 0.0], [0.0, 1.0]]))


def test_observation_window_validation():
    with pytest.raises(ValueError):
        ObservationWindow(np.array([0.1, 0.1]), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        ObservationWindow(np.array([0.1, 0.2]), np.zeros((3, 2)), np.zeros((2, 2)))
