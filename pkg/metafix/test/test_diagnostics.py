# -*- coding: utf-8 -*-

from dataclasses import replace
import math

from ..diagnostics import analyze, analyze_series, expected_contraction_experiment, self_model_accuracy
from ..errors import HistoryError, ModeError
from ..simulator import run_scenario
from .scenarios import small_config


def test_analyze_series():
    residuals = [0.8, 0.4, 0.2, 0.1, 0.05, 0.05, 0.05, 0.05]
    violations = [None, False, True, False, None, False, False, True]
    report = analyze_series(residuals, violations)
    assert math.isnan(report.empirical_c_series[0])
    assert list(report.empirical_c_series[1:]) == [0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0]
    assert report.plateau_level == 0.05
    assert report.plateau_onset == 3
    assert math.isclose(report.condition_violation_rate, 2.0 / 6.0)
    assert math.isclose(report.mean_empirical_c, 5.0 / 7.0)
    d = report.as_dict()
    assert d["metric"] == "TV" and d["plateau_onset"] == 3
    assert len(d["residual_series"]) == len(d["empirical_c_series"]) == 8


def test_analyze_series_edge_cases():
    report = analyze_series([1.0, 0.0, 0.0, 0.0])
    assert report.empirical_c_series[1] == 0.0
    assert math.isnan(report.empirical_c_series[2]) and math.isnan(report.empirical_c_series[3])
    assert report.plateau_level == 0.0 and report.plateau_onset == 1
    assert report.condition_violation_rate == 0.0
    assert math.isclose(analyze_series([0.0] * 4).plateau_level, 0.0)
    assert math.isnan(analyze_series([0.0] * 4).mean_empirical_c)
    try:
        analyze_series([0.5, 0.25, 0.125])
    except HistoryError:
        pass
    else:
        assert False, "three intervals are too few"


def test_analyze_trajectory():
    traj = run_scenario(small_config("GoalStability", agent__proposal_sigma=0.3))
    report = analyze(traj)
    assert report.condition_violation_rate == 0.0
    assert len(report.residual_series) == len(traj)
    assert analyze(traj, "W1").metric_choice == "W1"
    assert list(analyze(traj, "W1").residual_series) == list(traj.residuals_w1)
    try:
        analyze(traj, "KL")
    except ValueError:
        pass
    else:
        assert False, "unknown metric choice should be rejected"


def test_expected_contraction():
    frozen = small_config("GoalStability", agent__proposal_sigma=0.0)
    # goals never move, so the interval operator is the identity
    assert math.isclose(expected_contraction_experiment(frozen, 8, seed=0), 1.0)
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.3)
    c = expected_contraction_experiment(cfg, 16, seed=2, samples_per_cell=4)
    assert 0.0 <= c <= 1.0 + 1e-12
    assert c == expected_contraction_experiment(cfg, 16, seed=2, samples_per_cell=4)
    w1 = expected_contraction_experiment(cfg, 16, seed=2, metric_choice="W1", samples_per_cell=4)
    assert w1 >= 0.0
    try:
        expected_contraction_experiment(cfg, 0, seed=0)
    except ValueError:
        pass
    else:
        assert False, "at least one pair is needed"


def _global_trajectory():
    cfg = small_config("GlobalModerated", agent__proposal_sigma=0.2, environment__noise_sigma=0.02,
                       environment__center=[0.8])
    return cfg, run_scenario(cfg)


def test_self_model_accuracy():
    cfg, traj = _global_trajectory()
    accuracy = self_model_accuracy(cfg, traj, 3, seed=0)
    assert 0.0 <= accuracy <= 1.0
    assert accuracy == self_model_accuracy(cfg, traj, 3, seed=0)
    shuffled = self_model_accuracy(cfg, traj, 3, seed=0, shuffle_labels=True)
    assert 0.0 <= shuffled <= 1.0
    assert self_model_accuracy(cfg, replace(traj, transitions=()), 3, seed=0) == 1.0
    try:
        self_model_accuracy(cfg, traj, 0, seed=0)
    except ValueError:
        pass
    else:
        assert False, "at least one query state is needed"


def test_self_model_accuracy_mode():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.2, environment__noise_sigma=0.02)
    traj = run_scenario(cfg)
    try:
        self_model_accuracy(cfg, traj, 2, seed=0)
    except ModeError:
        pass
    else:
        assert False, "strict mode needs a global-search trajectory"
    assert 0.0 <= self_model_accuracy(cfg, traj, 2, seed=0, strict=False) <= 1.0


def test_self_model_beats_shuffled_control():
    # a moving target keeps the goals travelling, so interval transitions differ from one another
    cfg = small_config("GlobalModerated", agent__proposal_sigma=0.05, environment__objective="moving-well",
                       environment__center=[0.2], environment__velocity=[0.05], goals__initial=[0.2],
                       intervals=12)
    traj = run_scenario(cfg)
    wins = 0
    for seed in range(10):
        own = self_model_accuracy(cfg, traj, 5, seed=seed)
        control = self_model_accuracy(cfg, traj, 5, seed=seed, shuffle_labels=True)
        wins += own < control
    assert wins >= 9


def runtests():
    test_analyze_series()
    test_analyze_series_edge_cases()
    test_analyze_trajectory()
    test_expected_contraction()
    test_self_model_accuracy()
    test_self_model_accuracy_mode()
    test_self_model_beats_shuffled_control()

if __name__ == '__main__':
    runtests()
