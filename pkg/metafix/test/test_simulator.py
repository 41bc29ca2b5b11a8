# -*- coding: utf-8 -*-

import math
import os

import numpy as np

from ..config import load_config
from ..diagnostics import analyze
from ..errors import GridError
from ..goalspace import (AugmentedState, DiscreteDistribution, DomainBox, StateGrid, goal_distance,
                         total_variation)
from ..markov import dobrushin_coefficient
from ..metagoal import Variant, check_dynamic_contraction, check_goal_contraction
from ..simulator import (Agent, build_kernel, estimate_R, fresh_agent, initial_state, iterate_F,
                         realize_F, rollout, run_scenario, step_interval)
from ..utils import make_rng
from .scenarios import small_config


def test_fresh_agent():
    cfg = small_config()
    agent = fresh_agent(cfg)
    assert agent.step == 0 and agent.mode is Variant.GoalStability
    h = agent.history
    assert len(h) == 2 and h[0].step == -1 and h[1].step == 0
    assert math.isclose(goal_distance(h[1].goals, h[0].goals, cfg.initial_metric), 0.1)
    state = agent.state
    assert np.allclose(state.theta, state.goals.array)
    assert state.step_scale == 0.1
    assert state.metagoal_params == cfg.metagoal.params_vector()
    moved = initial_state(cfg, goals=(0.2,), theta=(0.9,))
    assert moved.goals.coords == (0.2,) and np.allclose(moved.theta, [0.9])


def test_step_interval_kinds():
    cfg = small_config("Unconstrained")
    agent = fresh_agent(cfg)
    after = step_interval(agent, cfg, make_rng(0))
    assert isinstance(after, Agent)
    assert after.step == 1 and len(after.history) == 3
    assert after.history[-1].goals == after.state.goals
    plain = step_interval(agent.state, cfg, make_rng(0))
    assert isinstance(plain, AugmentedState)
    assert plain == after.state
    assert step_interval(agent, cfg, make_rng(0)) == after


def test_passive_steps_keep_goals_without_noise():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.5)
    agent = fresh_agent(cfg)
    path = rollout(cfg, agent, 4, make_rng(1), filtered=False)
    assert all(a.state.goals == agent.state.goals for a in path)
    assert [a.step for a in path] == [1, 2, 3, 4]


def test_binary_noise_is_applied_in_full_without_a_filter():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.0,
                       environment__noise="binary", environment__noise_sigma=0.01)
    agent = fresh_agent(cfg)
    after = step_interval(agent, cfg, make_rng(3))
    assert math.isclose(abs(after.state.goals.coords[0] - 0.5), 0.01)
    filtered = small_config("GoalStability", agent__proposal_sigma=0.0, agent__modification_rate=0.75,
                            environment__noise="binary", environment__noise_sigma=0.01)
    after = step_interval(fresh_agent(filtered), filtered, make_rng(3))
    # the metagoal effort cancels all but (1 - rho) of the disturbance
    assert math.isclose(abs(after.state.goals.coords[0] - 0.5), 0.0025)


def test_resample_noise_stays_in_the_box():
    cfg = small_config("Unconstrained", environment__noise="resample", environment__noise_sigma=1.0)
    path = rollout(cfg, fresh_agent(cfg), 10, make_rng(5))
    assert all(cfg.domain.contains(a.state.goals.array) for a in path)
    assert len({a.state.goals.coords for a in path}) > 1


def test_goal_stability_contracts_every_step():
    cfg = small_config("GoalStability", agent__proposal_sigma=0.3)
    agent = fresh_agent(cfg)
    rng = make_rng(7)
    for _ in range(30):
        agent = step_interval(agent, cfg, rng)
        assert check_goal_contraction(agent.history, cfg.metagoal, agent.history[-2].metric)


def test_dynamic_variants_contract_every_component():
    for variant in ("GoalStabilityDynamicMeta", "GoalStabilityDynamicMetric"):
        cfg = small_config(variant, goals__dim=2, goals__grid_cells_per_dim=3,
                           agent__proposal_sigma=0.3, agent__meta_sigma=0.2, agent__metric_sigma=0.2)
        agent = fresh_agent(cfg)
        rng = make_rng(11)
        for _ in range(25):
            agent = step_interval(agent, cfg, rng)
            report = check_dynamic_contraction(agent.history, cfg.metagoal, agent.history[-2].metric)
            assert report.overall, (variant, report)
        if variant == "GoalStabilityDynamicMetric":
            assert len(report) == 3


def test_global_step_spends_rollouts():
    cfg = small_config("GlobalModerated", agent__proposal_sigma=0.2)
    agent = step_interval(fresh_agent(cfg), cfg, make_rng(2))
    assert agent.evaluations > 0
    assert goal_distance(agent.history[-1].goals, agent.history[-2].goals,
                         agent.history[-2].metric) <= cfg.metagoal.drift_bound


def test_estimate_R():
    cfg = small_config("GoalStability", agent__proposal_sigma=0.0)
    R = estimate_R(cfg, initial_state(cfg), 4, make_rng(0))
    assert R.grid == cfg.grid
    assert R == DiscreteDistribution.point_mass(2, cfg.grid)
    noisy = small_config("Unconstrained", agent__proposal_sigma=0.2)
    R1 = estimate_R(noisy, fresh_agent(noisy), 8, make_rng(3))
    assert R1 == estimate_R(noisy, fresh_agent(noisy), 8, make_rng(3))
    try:
        estimate_R(cfg, initial_state(cfg), 0, make_rng(0))
    except ValueError:
        pass
    else:
        assert False, "at least one sample is needed"


def test_realize_F_matches_kernel():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.2)
    kernel = build_kernel(cfg, 3, seed=5)
    assert kernel.grid == cfg.grid
    R = DiscreteDistribution.uniform(cfg.grid)
    assert np.allclose(realize_F(cfg, R, 3, seed=5).probs, kernel.push(R).probs)
    point = DiscreteDistribution.point_mass(1, cfg.grid)
    assert np.allclose(realize_F(cfg, point, 3, seed=5).probs, kernel.rows[1])
    other = DiscreteDistribution.uniform(StateGrid(DomainBox.unit(1), 5))
    try:
        realize_F(cfg, other, 3, seed=5)
    except GridError:
        pass
    else:
        assert False, "a distribution on another grid should be rejected"


def test_iterate_F():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.2)
    R0 = DiscreteDistribution.point_mass(0, cfg.grid)
    iterates, residuals = iterate_F(cfg, R0, 5, 2, seed=1)
    assert len(iterates) == len(residuals) + 1 == 6
    assert all(0.0 <= r <= 1.0 for r in residuals)
    short, _ = iterate_F(cfg, R0, 5, 2, seed=1, tol=2.0)
    assert len(short) == 2


def test_run_scenario_shape_and_determinism():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.1, environment__noise_sigma=0.02)
    traj = run_scenario(cfg)
    assert len(traj) == cfg.intervals
    assert len(traj.distributions) == cfg.intervals + 1
    assert len(traj.snapshots) == 1 + cfg.intervals * cfg.steps_per_interval
    assert len(traj.starts) == len(traj.transitions) == cfg.intervals
    assert traj.timing == (1, 2, cfg.intervals)
    assert all(m.check_dict == {} for m in traj.intervals)
    again = run_scenario(cfg)
    assert again.residuals_tv == traj.residuals_tv
    assert again.residuals_w1 == traj.residuals_w1
    assert again.snapshots == traj.snapshots
    assert run_scenario(cfg.with_seed(1)).snapshots != traj.snapshots


def test_goal_stability_has_no_violations_without_noise():
    cfg = small_config("GoalStability", agent__proposal_sigma=0.3)
    traj = run_scenario(cfg)
    for m in traj.intervals:
        assert m.check_dict == {"goals": True, "overall": True}
    steps = [m.goal_step for m in traj.intervals]
    assert all(b <= a for a, b in zip(steps, steps[1:]))


def test_moderated_run_records_plausible_variation():
    cfg = small_config("ModeratedEvolution", agent__proposal_sigma=0.0, intervals=4)
    traj = run_scenario(cfg)
    for m in traj.intervals:
        assert m.mpv is not None
        assert "moderated" in m.check_dict
    mpvs = [m.mpv for m in traj.intervals]
    assert all(b < a for a, b in zip(mpvs, mpvs[1:]))


def test_hybrid_switches_on_budget():
    cfg = small_config("Hybrid", hybrid__compute_budget=0, agent__proposal_sigma=0.1)
    traj = run_scenario(cfg)
    modes = [m.mode for m in traj.intervals]
    assert modes[0] == "GoalStability"
    assert modes[1] == "GlobalModeratedDynamic"
    assert all(mode == "GoalStability" for mode in modes[2:])
    assert traj.intervals[1].evaluations > 0


def test_tremor_under_noise():
    path = os.path.join(os.path.dirname(__file__), os.pardir, os.pardir, "demo", "goal_stability.toml")
    cfg = load_config(path).with_overrides({"environment.noise_sigma": 0.05, "intervals": 200})
    traj = run_scenario(cfg)
    r = traj.residuals_tv
    quarter = len(r) // 4
    # the residual stops shrinking at a noise-driven floor, and does not grow either
    assert max(r[-quarter:]) <= max(r[:quarter])
    report = analyze(traj)
    assert report.plateau_level > 0.0
    # the checks see the disturbed goals, not the filtered proposals
    assert report.condition_violation_rate > 0.5


def test_moderated_gap_contracts_to_target():
    cfg = small_config("ModeratedEvolution", agent__proposal_sigma=0.0, metagoal__target_variation=0.02,
                       intervals=12)
    target = cfg.metagoal.target_variation
    traj = run_scenario(cfg)
    gaps = [abs(m.mpv - target) for m in traj.intervals]
    for a, b in zip(gaps, gaps[1:]):
        assert b <= 0.55 * a
    reached = [j for j, g in enumerate(gaps) if g < 0.05 * target]
    assert reached and reached[0] < 20
    assert all(m.check_dict["moderated"] for m in traj.intervals)


def test_realize_F_is_linear():
    cfg = small_config("GoalStability", agent__proposal_sigma=0.1, environment__noise_sigma=0.02)
    R1 = DiscreteDistribution([0.7, 0.3, 0.0, 0.0], cfg.grid)
    R2 = DiscreteDistribution([0.0, 0.2, 0.3, 0.5], cfg.grid)
    a = 0.25
    mixed = DiscreteDistribution(a * R1.probs + (1.0 - a) * R2.probs, cfg.grid)
    out = realize_F(cfg, mixed, 3, seed=9).probs
    expected = a * realize_F(cfg, R1, 3, seed=9).probs + (1.0 - a) * realize_F(cfg, R2, 3, seed=9).probs
    assert np.allclose(out, expected, atol=1e-12)


def test_built_kernels_are_nonexpansive():
    cfg = small_config("Unconstrained", agent__proposal_sigma=0.2, environment__noise_sigma=0.05)
    rng = np.random.default_rng(17)
    for seed in range(4):
        T = build_kernel(cfg, 4, seed)
        assert dobrushin_coefficient(T) <= 1.0
        for _ in range(25):
            mu = DiscreteDistribution(rng.dirichlet(np.ones(T.size)), T.grid)
            nu = DiscreteDistribution(rng.dirichlet(np.ones(T.size)), T.grid)
            assert total_variation(T.push(mu), T.push(nu)) <= total_variation(mu, nu) + 1e-12


def test_global_run_keeps_drift_bounds():
    cfg = small_config("GlobalModerated", agent__proposal_sigma=0.2, environment__center=[0.8], intervals=100)
    traj = run_scenario(cfg)
    assert len(traj) == 100
    for m in traj.intervals:
        assert m.check_dict["overall"]
    k = cfg.metagoal.drift_bound
    for a, b in zip(traj.snapshots, traj.snapshots[1:]):
        assert goal_distance(b.goals, a.goals, a.metric_params) <= k


def runtests():
    test_fresh_agent()
    test_step_interval_kinds()
    test_passive_steps_keep_goals_without_noise()
    test_binary_noise_is_applied_in_full_without_a_filter()
    test_resample_noise_stays_in_the_box()
    test_goal_stability_contracts_every_step()
    test_dynamic_variants_contract_every_component()
    test_global_step_spends_rollouts()
    test_estimate_R()
    test_realize_F_matches_kernel()
    test_iterate_F()
    test_run_scenario_shape_and_determinism()
    test_goal_stability_has_no_violations_without_noise()
    test_moderated_run_records_plausible_variation()
    test_hybrid_switches_on_budget()
    test_tremor_under_noise()
    test_moderated_gap_contracts_to_target()
    test_realize_F_is_linear()
    test_built_kernels_are_nonexpansive()
    test_global_run_keeps_drift_bounds()

if __name__ == '__main__':
    runtests()
