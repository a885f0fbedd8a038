"""Shared test drivers: stride loops over synthetic streams and the
independent exact-filter oracle the particle tracker is checked against."""

import numpy as np

from intenttrack.config import ScenarioConfig
from intenttrack.filtering import IntentionSpace, FilterConfig
from intenttrack.motion import GilmParams, ObservationWindow, fr_goal_region, gilm_log_likelihood
from intenttrack.tracker import MifConfig, ParticleSet, mif_step
from intenttrack.world import Workspace


def mif_config(cfg: ScenarioConfig, n_particles=None) -> MifConfig:
    t = cfg.tracker
    return MifConfig(
        filt=FilterConfig(t.horizon, t.dt, t.stay_prob_task),
        gilm=GilmParams(t.speed_window, t.process_sigma_task**2 * np.eye(2),
                        t.goal_backprop_task),
        n_particles=n_particles or t.n_particles,
        resample_frac=t.resample_frac,
    )


def stride_windows(stream, horizon, context):
    """Non-overlapping stride windows over a synthetic stream, mirroring a
    tracker that strides every `horizon` fresh samples."""
    maxlen = context + horizon + 2
    out = []
    start = horizon
    while start + horizon <= len(stream.wrist):
        lo = max(0, start + horizon - maxlen)
        hi = start + horizon
        out.append(
            ObservationWindow(
                stream.timestamps[lo:hi], stream.wrist[lo:hi], stream.ee[lo:hi]
            )
        )
        start += horizon
    return out


def stride_logliks(window, goals, space, horizon, gilm):
    fr_label = space.labels[-1]
    vals = []
    for label in space.labels:
        goal = goals[label] if label != fr_label else goals[fr_label]
        vals.append(gilm_log_likelihood(window, goal, horizon, gilm))
    return np.array(vals)


def exact_filter_trace(logliks_per_stride, stay_prob, m):
    """Independent 5-state forward recursion on the same stride evidence."""
    p = np.full(m, 1.0 / m)
    switch = (1.0 - stay_prob) / (m - 1)
    trace = []
    for ll in logliks_per_stride:
        pred = np.empty(m)
        for j in range(m):
            pred[j] = stay_prob * p[j] + switch * (p.sum() - p[j])
        lik = np.exp(ll - ll.max())
        post = pred * lik
        p = post / post.sum()
        trace.append(p.copy())
    return np.array(trace)


def run_mif_on_stream(stream, cfg: ScenarioConfig, n_particles, seed):
    """Drive the particle stride op over a stream; returns (posterior trace,
    exact oracle trace) computed from identical stride likelihoods."""
    space = IntentionSpace.task()
    ws = Workspace.from_config(cfg.workspace)
    goals = ws.task_goal_regions(cfg.tracker.goal_sigma_frac)
    mcfg = mif_config(cfg, n_particles)
    rng = np.random.default_rng(seed)
    ps = ParticleSet.uniform(space, n_particles, rng)

    posts, logliks = [], []
    for window in stride_windows(stream, mcfg.filt.horizon, cfg.tracker.speed_window):
        all_goals = dict(goals)
        all_goals[space.labels[-1]] = fr_goal_region(window.robot_ee[-1], cfg.tracker.fr_sigma**2 * np.eye(2))
        ll = stride_logliks(window, all_goals, space, mcfg.filt.horizon, mcfg.gilm)
        logliks.append(ll)
        ps, post = mif_step(ps, window, all_goals, mcfg)
        posts.append(post.probs.copy())
    oracle = exact_filter_trace(logliks, mcfg.filt.stay_prob, space.m)
    return np.array(posts), oracle
