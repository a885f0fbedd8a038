"""Configuration, trial logs, metrics, and batch aggregation."""

import json
import math

import numpy as np
import pytest

from intenttrack.config import (
    ControlConfig,
    ScenarioConfig,
    VARIANT_COEXIST,
    VARIANT_COOPERATE,
    VARIANT_HIT,
    default_config,
    figure_scenario,
)
from intenttrack.errors import ConfigError
from intenttrack.filtering import COEXIST, COOPERATE
from intenttrack.metrics import (
    Metrics,
    compute_metrics,
    frame_accuracy,
    format_summary_table,
    summaries_to_csv,
    summarize,
)
from intenttrack.runner import run_batch, run_trial
from intenttrack.triallog import TrialLog, dump_lines, read_log, write_log
from intenttrack.world import TickRecord


# -- config ---------------------------------------------------------------------


def test_config_roundtrip_json():
    cfg = figure_scenario(seed=9)
    doc = cfg.to_json()
    back = ScenarioConfig.from_json(doc)
    assert back == cfg


def test_config_error_paths():
    with pytest.raises(ConfigError, match="variant"):
        ScenarioConfig(variant="nope").validate()
    with pytest.raises(ConfigError, match="schedule\\[1\\]"):
        ScenarioConfig(schedule=("part1", "part9")).validate()
    with pytest.raises(ConfigError, match="tracker.stay_prob_interactive"):
        ScenarioConfig(tracker=default_config().tracker.__class__(
            stay_prob_task=0.99, stay_prob_interactive=0.98)).validate()
    with pytest.raises(ConfigError, match="control.apf_r_min"):
        ScenarioConfig(control=ControlConfig(apf_r_min=0.9, apf_r_max=0.5)).validate()
    with pytest.raises(ConfigError, match="unknown field"):
        ScenarioConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError, match="schema_version"):
        ScenarioConfig.from_dict({"schema_version": 99})


def test_config_variant_consistency():
    assert default_config("coex").variant == VARIANT_COEXIST
    assert default_config("coop").variant == VARIANT_COOPERATE
    assert default_config("hit").variant == VARIANT_HIT


def test_stride_bound_enforced():
    bad = default_config().tracker.__class__(horizon=7)
    with pytest.raises(ConfigError, match="0.2"):
        ScenarioConfig(tracker=bad).validate()


# -- trial logs -------------------------------------------------------------------


def test_same_seed_bit_identical_logs():
    cfg = figure_scenario(seed=4)
    a = "\n".join(dump_lines(run_trial(cfg)))
    b = "\n".join(dump_lines(run_trial(cfg)))
    assert a == b


def test_log_write_read_roundtrip(tmp_path):
    cfg = ScenarioConfig(seed=1, duration_cap=6.0).validate()
    log = run_trial(cfg)
    path = tmp_path / "trial.jsonl"
    write_log(log, path)
    back = read_log(path)
    assert back.config == cfg
    assert len(back.records) == len(log.records)
    assert "\n".join(dump_lines(back)) == "\n".join(dump_lines(log))


def test_log_rejects_missing_header(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"t": 1}\n')
    with pytest.raises(ValueError, match="header"):
        read_log(p)


# -- metrics -----------------------------------------------------------------------


def _rec(t, ee, mode=COEXIST, pull=0.0, post1=None, post2=None, gt1=None, gt2=COEXIST,
         assemblies=None):
    return TickRecord(
        t=t, wrist=np.zeros(2), raw=None, smoothed=np.zeros(2), ee=np.asarray(ee, float),
        mode=mode, post1=post1, post2=post2, pull=pull,
        queues={"task": [], "ongoing": [], "ready": [], "done": ["part1", "part2", "part3", "part4"]},
        assemblies=assemblies or {p: "pushed-ok" for p in ("part1", "part2", "part3", "part4")},
        gt1=gt1, gt2=gt2, events=[],
    )


def test_metrics_stationary_robot_zero_paths():
    cfg = figure_scenario()
    log = TrialLog(cfg, cfg.schedule, [_rec(0.1 * k, [0.4, 0.4]) for k in range(5)])
    m = compute_metrics(log)
    assert m.automated_path == 0.0 and m.guided_path == 0.0


def test_metrics_three_segment_geometry():
    cfg = figure_scenario()
    recs = [
        _rec(0.0, [0.0, 0.0], COEXIST),
        _rec(0.1, [0.3, 0.4], COEXIST),          # 0.5 automated
        _rec(0.2, [0.3, 0.6], COOPERATE, pull=2.0),  # 0.2 guided, energy 0.4
        _rec(0.3, [0.6, 0.6], COEXIST),          # 0.3 automated
    ]
    log = TrialLog(cfg, cfg.schedule, recs)
    m = compute_metrics(log)
    assert m.automated_path == pytest.approx(0.8)
    assert m.guided_path == pytest.approx(0.2)
    assert m.human_energy == pytest.approx(0.4)
    assert m.completion_time == pytest.approx(0.3)


def test_metrics_truncated_log_errors():
    cfg = figure_scenario()
    with pytest.raises(ValueError, match="truncated"):
        compute_metrics(TrialLog(cfg, cfg.schedule, []))


def test_metrics_additivity_on_real_trial():
    log = run_trial(figure_scenario(seed=6))
    m = compute_metrics(log)
    total = 0.0
    prev = None
    for r in log.records:
        if prev is not None:
            total += float(np.linalg.norm(r.ee - prev.ee))
        prev = r
    assert m.automated_path + m.guided_path == pytest.approx(total, abs=1e-9)


def test_metrics_variant_absences():
    coex = compute_metrics(run_trial(default_config("coex", seed=0).replace(duration_cap=8.0)))
    assert coex.guided_path is None and coex.human_energy is None and coex.mean_human_force is None
    coop = compute_metrics(run_trial(default_config("coop", seed=0).replace(duration_cap=8.0)))
    assert coop.automated_path is None
    assert coop.low_frame_acc is None and coop.high_frame_acc is None


def test_frame_accuracy_perfect_and_wrong_fixtures():
    cfg = figure_scenario()
    right = [
        _rec(0.1, [0, 0], post1=np.array([0.9, 0.05, 0.03, 0.01, 0.01]),
             post2=np.array([0.8, 0.2]), gt1="part1", gt2=COEXIST)
        for _ in range(10)
    ]
    wrong = [
        _rec(0.1, [0, 0], post1=np.array([0.9, 0.05, 0.03, 0.01, 0.01]),
             post2=np.array([0.8, 0.2]), gt1="part2", gt2=COOPERATE)
        for _ in range(10)
    ]
    assert frame_accuracy(TrialLog(cfg, cfg.schedule, right)) == (1.0, 1.0)
    assert frame_accuracy(TrialLog(cfg, cfg.schedule, wrong)) == (0.0, 0.0)


def test_frame_accuracy_skips_blank_ground_truth():
    cfg = figure_scenario()
    recs = [
        _rec(0.1, [0, 0], post1=np.array([0.9, 0.05, 0.03, 0.01, 0.01]),
             post2=np.array([0.8, 0.2]), gt1=None, gt2=COEXIST),
        _rec(0.2, [0, 0], post1=np.array([0.9, 0.05, 0.03, 0.01, 0.01]),
             post2=np.array([0.8, 0.2]), gt1="part1", gt2=COEXIST),
    ]
    low, high = frame_accuracy(TrialLog(cfg, cfg.schedule, recs))
    assert low == 1.0 and high == 1.0


# -- batch ---------------------------------------------------------------------------


def test_batch_three_variants_shape():
    base = ScenarioConfig(duration_cap=600.0)
    out = run_batch(["coexistence-only", "cooperation-only", "hit"], repetitions=2, base=base)
    assert set(out) == {VARIANT_COEXIST, VARIANT_COOPERATE, VARIANT_HIT}
    summaries = [summarize(v, rows) for v, (seeds, rows) in out.items()]
    csv_text = summaries_to_csv(summaries)
    lines = csv_text.strip().splitlines()
    assert len(lines) == 4  # header + 3 variants
    assert lines[0].startswith("system,n,completion_time_mean")
    assert "N/A" in csv_text  # absent columns are marked
    table = format_summary_table(summaries)
    assert "hit" in table and "coexistence-only" in table


def test_summarize_handles_all_absent():
    rows = [Metrics(10.0, None, 1.0, 0.5, 2.0, 0, None, None)]
    s = summarize(VARIANT_COOPERATE, rows)
    assert s.mean["automated_path"] is None
    assert s.mean["guided_path"] == 1.0
