# -*- coding: utf-8 -*-

import itertools
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from ..errors import ConfigError, HistoryError, ModeError, RangeError
from ..goalspace import AugmentedState, DomainBox, GoalVector, MetricParams, goal_distance
from ..metagoal import (GoalHistory, HybridPolicyState, MetaGoalSpec, Snapshot, Variant,
                        check_drift_bounds, check_dynamic_contraction, check_goal_contraction,
                        check_moderated_contraction, enforce_contraction, global_modification_search,
                        hybrid_policy_step, max_plausible_variation, modification_score,
                        moderate_variation, project_into_ball)
from ..simulator import fresh_agent
from .scenarios import small_config

UNIT = DomainBox.unit(1)
M1 = MetricParams.canonical(1)


def _history(points, box=UNIT, metric=None, metas=None, metrics=None):
    metric = metric or MetricParams.canonical(box.dim)
    snaps = []
    for i, g in enumerate(points):
        meta = metas[i] if metas else (0.5,)
        m = metrics[i] if metrics else metric
        snaps.append(Snapshot(i, GoalVector(tuple(np.atleast_1d(g)), box), tuple(meta), m))
    return GoalHistory(tuple(snaps), spacing=1)


def test_spec_validation():
    spec = MetaGoalSpec(Variant.GoalStability, c=0.3, inner_interval=2, interval_ratio=3)
    assert spec.outer_interval == 6
    assert len(spec.params_vector()) == 8
    assert spec.with_variant("Unconstrained").variant is Variant.Unconstrained
    assert MetaGoalSpec("ModeratedEvolution").variant is Variant.ModeratedEvolution
    for kwargs in (dict(c=1.0), dict(c=0.0), dict(inner_interval=0), dict(drift_bound=-0.1),
                   dict(variant="NoSuchVariant"),
                   dict(variant="GlobalModerated", inner_interval=4, horizon=4)):
        try:
            MetaGoalSpec(**kwargs)
        except ConfigError as err:
            assert err.problems
        else:
            assert False, f"{kwargs} should be rejected"
    try:
        MetaGoalSpec(c=2.0, horizon=0)
    except ConfigError as err:
        assert len(err.problems) == 2
    else:
        assert False, "both problems should be reported"


def test_history():
    try:
        GoalHistory(capacity=2)
    except ValueError:
        pass
    else:
        assert False, "capacity below 3 should be rejected"
    a = Snapshot(0, GoalVector((0.1,), UNIT), (0.5,), M1)
    b = Snapshot(2, GoalVector((0.2,), UNIT), (0.5,), M1)
    try:
        GoalHistory((a, b), spacing=1)
    except HistoryError:
        pass
    else:
        assert False, "misspaced snapshots should be rejected"
    h = GoalHistory((a,), spacing=2, capacity=3)
    for k in range(1, 5):
        h = h.push(Snapshot(2 * k, GoalVector((0.1 * k,), UNIT), (0.5,), M1))
    assert len(h) == 3
    assert h[-1].step == 8 and h[0].step == 4
    try:
        GoalHistory((a,)).require(2)
    except HistoryError:
        pass
    else:
        assert False, "a single snapshot is not enough"


def test_goal_contraction_check():
    spec = MetaGoalSpec(c=0.5)
    assert check_goal_contraction(_history([0.0, 0.4, 0.5]), spec, M1)
    assert not check_goal_contraction(_history([0.0, 0.4, 0.7]), spec, M1)
    # strict inequality: equality is a violation
    assert not check_goal_contraction(_history([0.0, 0.5, 0.75]), spec, M1)
    # stationary goals satisfy the condition
    assert check_goal_contraction(_history([0.3, 0.3, 0.3]), spec, M1)
    # any movement after a stationary step violates it
    assert not check_goal_contraction(_history([0.3, 0.3, 0.31]), spec, M1)
    try:
        check_goal_contraction(_history([0.0, 0.1]), spec, M1)
    except HistoryError:
        pass
    else:
        assert False, "three snapshots are needed"


def test_dynamic_contraction_check():
    try:
        check_dynamic_contraction(_history([0.0, 0.4, 0.5]), MetaGoalSpec(), M1)
    except ModeError:
        pass
    else:
        assert False, "not a dynamic variant"
    meta_spec = MetaGoalSpec("GoalStabilityDynamicMeta", c=0.5)
    report = check_dynamic_contraction(_history([0.0, 0.4, 0.5], metas=[(0.0,), (0.4,), (0.9,)]), meta_spec, M1)
    assert report.goals and not report.metagoal and not report.overall
    assert len(report) == 2 and report.metric is None
    assert report.as_dict() == {"goals": True, "metagoal": False, "overall": False}

    metric_spec = MetaGoalSpec("GoalStabilityDynamicMetric", c=0.5)
    metrics = [MetricParams((1.0,)), MetricParams((2.0,)), MetricParams((2.25,))]
    report = check_dynamic_contraction(_history([0.0, 0.4, 0.5], metrics=metrics), metric_spec, M1)
    assert len(report) == 3
    # goal steps are measured by the metric of the older snapshot
    assert report.goals and report.metagoal and report.metric and report.overall
    metrics = [MetricParams((1.0,)), MetricParams((1.5,)), MetricParams((2.0,))]
    report = check_dynamic_contraction(_history([0.0, 0.4, 0.5], metrics=metrics), metric_spec, M1)
    assert not report.metric and report.goals


def test_project_into_ball():
    m = MetricParams.canonical(2)
    center = np.array([0.0, 0.0])
    inside = np.array([0.1, 0.1])
    assert np.array_equal(project_into_ball(center, inside, 1.0, m), inside)
    out = project_into_ball(center, np.array([3.0, 4.0]), 1.0, m)
    assert goal_distance(out, center, m) < 1.0
    assert np.allclose(out / np.linalg.norm(out), [0.6, 0.8])
    assert np.array_equal(project_into_ball(center, np.array([3.0, 4.0]), 0.0, m), center)


@st.composite
def enforcement_case(draw):
    n = draw(st.integers(min_value=1, max_value=3))
    box = DomainBox((-1.0,) * n, (1.0,) * n)
    coord = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
    points = [tuple(draw(st.lists(coord, min_size=n, max_size=n))) for _ in range(3)]
    weights = tuple(draw(st.lists(st.floats(min_value=0.05, max_value=4.0), min_size=n, max_size=n)))
    p = draw(st.sampled_from([1.0, 2.0, 3.5, math.inf]))
    c = draw(st.floats(min_value=0.05, max_value=0.95))
    return box, points, MetricParams(weights, p), c


def _enforced_history(box, points, m, c):
    prev, current, proposal = points
    h = _history([prev, current], box=box, metric=m)
    spec = MetaGoalSpec(c=c)
    new = enforce_contraction(proposal, h, spec, m)
    return h.push(Snapshot(2, new, (0.5,), m)), spec


def _assert_idempotent(h, spec, m):
    # h ends with the enforced goals; enforcing them again from the same history changes nothing
    before = GoalHistory(h.snapshots[:-1], spacing=1)
    once = h[-1].goals
    assert enforce_contraction(once, before, spec, m).coords == once.coords


@settings(max_examples=500, deadline=None)
@given(enforcement_case())
def test_enforcement_always_contracts(case):
    box, points, m, c = case
    h, spec = _enforced_history(box, points, m, c)
    assert check_goal_contraction(h, spec, m)
    _assert_idempotent(h, spec, m)


def test_enforcement_randomized():
    rng = np.random.default_rng(2024)
    box = DomainBox((-1.0, -1.0), (1.0, 1.0))
    for _ in range(10000):
        points = [tuple(rng.uniform(-1.0, 1.0, 2)) for _ in range(3)]
        m = MetricParams(tuple(rng.uniform(0.1, 3.0, 2)), rng.choice([1.0, 2.0, math.inf]))
        h, spec = _enforced_history(box, points, m, float(rng.uniform(0.05, 0.95)))
        assert check_goal_contraction(h, spec, m)
        _assert_idempotent(h, spec, m)


def test_enforcement_keeps_allowed_proposals():
    h = _history([0.0, 0.4])
    spec = MetaGoalSpec(c=0.5)
    assert enforce_contraction((0.5,), h, spec, M1).coords == (0.5,)
    frozen = _history([0.4, 0.4])
    assert enforce_contraction((0.9,), frozen, spec, M1).coords == (0.4,)


def test_moderated_check():
    spec = MetaGoalSpec("ModeratedEvolution", c=0.5, target_variation=0.0)
    assert check_moderated_contraction(0.1, 0.3, spec)
    assert not check_moderated_contraction(0.2, 0.3, spec)
    assert check_moderated_contraction(0.0, 0.0, spec)
    targeted = MetaGoalSpec("ModeratedEvolution", c=0.5, target_variation=0.25)
    assert check_moderated_contraction(0.3, 0.5, targeted)  # |0.05| < 0.5 * |0.25|


def test_drift_bounds():
    try:
        check_drift_bounds(_history([0.25, 0.375]), MetaGoalSpec(), M1)
    except ModeError:
        pass
    else:
        assert False, "drift bounds apply to the global variants only"
    spec = MetaGoalSpec("GlobalModerated", drift_bound=0.125)
    report = check_drift_bounds(_history([0.25, 0.375]), spec, M1)
    assert report.overall  # the boundary is inclusive
    assert report.as_dict() == {"goals": True, "overall": True}
    assert not check_drift_bounds(_history([0.25, 0.5]), spec, M1).overall
    dynamic = MetaGoalSpec("GlobalModeratedDynamic", drift_bound=0.125, meta_drift_bound=0.125,
                           metric_drift_bound=0.125)
    report = check_drift_bounds(_history([0.25, 0.375], metas=[(0.5,), (1.0,)]), dynamic, M1)
    assert report.goals and not report.metagoal and report.metric
    assert not report.overall


def test_hybrid_policy():
    try:
        hybrid_policy_step(HybridPolicyState(), 1.5)
    except RangeError:
        pass
    else:
        assert False, "satisfaction must lie in [0, 1]"
    try:
        HybridPolicyState(current_mode="Hybrid")
    except ModeError:
        pass
    else:
        assert False, "the policy cannot switch into Hybrid"
    ps = HybridPolicyState()
    assert hybrid_policy_step(ps, 0.9).current_mode is Variant.GlobalModeratedDynamic
    assert hybrid_policy_step(ps.with_flags(survival_ok=False), 0.9).current_mode is Variant.Unconstrained
    assert hybrid_policy_step(ps.with_flags(convexity_ok=False), 0.9).current_mode is Variant.GoalStabilityDynamicMeta
    assert hybrid_policy_step(ps.with_flags(budget_ok=False), 0.9).current_mode is Variant.GoalStability
    # a full window of low satisfaction switches to moderated evolution, but not before it is full
    low = HybridPolicyState(window_length=3)
    for k in range(3):
        low = hybrid_policy_step(low, 0.1)
        expected = Variant.ModeratedEvolution if k == 2 else Variant.GlobalModeratedDynamic
        assert low.current_mode is expected
    assert len(low.window) == 3
    # survival outranks everything
    assert hybrid_policy_step(low.with_flags(survival_ok=False), 0.1).current_mode is Variant.Unconstrained


def test_max_plausible_variation():
    cfg = small_config("Unconstrained")
    state = fresh_agent(cfg).state
    short = max_plausible_variation(cfg, state, 2, 8, 0.5, seed=3)
    long = max_plausible_variation(cfg, state, 6, 8, 0.5, seed=3)
    high = max_plausible_variation(cfg, state, 6, 8, 1.0, seed=3)
    assert 0.0 < short <= long <= high
    assert long == max_plausible_variation(cfg, state, 6, 8, 0.5, seed=3)
    still = small_config("Unconstrained", agent__proposal_sigma=0.0)
    assert max_plausible_variation(still, fresh_agent(still), 6, 4, 1.0, seed=0) == 0.0
    try:
        max_plausible_variation(cfg, state, 2, 8, 0.0, seed=0)
    except ValueError:
        pass
    else:
        assert False, "quantile must lie in (0, 1]"


def test_moderate_variation_hits_target():
    cfg = small_config("ModeratedEvolution", agent__proposal_sigma=0.0)
    agent = fresh_agent(cfg)
    moderated, mpv = moderate_variation(cfg, agent, 0.2, seed=1)
    # with no noise the goals oscillate around the center by one step, so mpv equals the step scale
    assert math.isclose(mpv, 0.09, abs_tol=1e-6)
    assert math.isclose(moderated.state.step_scale, mpv, abs_tol=1e-6)
    assert check_moderated_contraction(mpv, 0.2, cfg.metagoal)
    assert moderated.history == agent.history


def _global_setup(variant="GlobalModerated"):
    cfg = small_config(variant, environment__center=[0.8], metagoal__drift_bound=0.1,
                       agent__proposal_sigma=0.2, search__candidates=6)
    return cfg, fresh_agent(cfg)


def test_global_search_respects_drift_bounds():
    for variant in ("GlobalModerated", "GlobalModeratedDynamic"):
        cfg, agent = _global_setup(variant)
        spec = cfg.metagoal
        for seed in range(5):
            chosen = global_modification_search(cfg, agent, spec, 6, seed)
            assert isinstance(chosen, AugmentedState)
            h = GoalHistory((Snapshot.of(0, agent.state), Snapshot.of(1, chosen)), spacing=1)
            assert check_drift_bounds(h, spec, agent.state.metric_params).overall
            assert chosen == global_modification_search(cfg, agent, spec, 6, seed)


def test_global_search_validation():
    cfg, agent = _global_setup()
    try:
        global_modification_search(cfg, agent, MetaGoalSpec(), 6, 0)
    except ModeError:
        pass
    else:
        assert False, "global search applies to global variants only"
    try:
        global_modification_search(cfg, agent, cfg.metagoal, 0, 0)
    except ValueError:
        pass
    else:
        assert False, "at least one candidate is needed"


def test_modification_score():
    cfg, agent = _global_setup()
    here = modification_score(cfg, agent, agent.state, seed=4)
    assert here == modification_score(cfg, agent, agent.state, seed=4)
    value, move = here
    assert value >= 0.0 and move >= 0.0
    # with no noise, passive rollouts leave the goals in place
    assert move == 0.0


def _expected_mode(flags, satisfaction, theta_low):
    if not flags["survival_ok"]:
        return Variant.Unconstrained
    if satisfaction < theta_low:
        return Variant.ModeratedEvolution
    if all(flags[k] for k in ("compactness_ok", "continuity_ok", "convexity_ok", "budget_ok")):
        return Variant.GlobalModeratedDynamic
    if flags["budget_ok"]:
        return Variant.GoalStabilityDynamicMeta
    return Variant.GoalStability


def test_hybrid_policy_all_flag_settings():
    names = ("compactness_ok", "continuity_ok", "convexity_ok", "survival_ok", "budget_ok")
    seen = set()
    for values in itertools.product((True, False), repeat=len(names)):
        flags = dict(zip(names, values))
        for satisfaction in (0.05, 0.5, 0.95):
            # a one-slot window is full after a single push
            ps = HybridPolicyState(window_length=1, **flags)
            out = hybrid_policy_step(ps, satisfaction)
            assert out.current_mode is _expected_mode(flags, satisfaction, ps.theta_low)
            assert out.flags == flags
            assert out.window == (satisfaction,)
            seen.add(out.current_mode)
    assert seen == {Variant.Unconstrained, Variant.ModeratedEvolution, Variant.GlobalModeratedDynamic,
                    Variant.GoalStabilityDynamicMeta, Variant.GoalStability}


def test_global_search_single_candidate_is_null():
    cfg, agent = _global_setup()
    for seed in range(3):
        assert global_modification_search(cfg, agent, cfg.metagoal, 1, seed) == agent.state


def test_global_search_all_candidates_out_of_bounds():
    cfg, agent = _global_setup()
    s = agent.state
    far = s.replace(goals=s.goals.moved_to(s.goals.array + 0.5))
    chosen = global_modification_search(cfg, agent, cfg.metagoal, 1, 0, proposal=far, include_null=False)
    assert chosen == s


def test_global_search_quadratic_well():
    # noise-free rollouts: the score of a candidate does not depend on the seed
    cfg = small_config("GlobalModerated", environment__center=[0.56], metagoal__drift_bound=0.1,
                       agent__proposal_sigma=0.0, search__candidates=6)
    agent = fresh_agent(cfg)
    s = agent.state
    k = cfg.metagoal.drift_bound
    r = cfg.search.search_radius

    def score(state):
        value, move = modification_score(cfg, agent, state, seed=0)
        return value + cfg.search.residual_weight * move

    grid = []
    for dg in np.linspace(-k, k, 21) * 0.999:
        for dt in np.linspace(-r, r, 21) * 0.999:
            candidate = s.replace(goals=s.goals.moved_to(s.goals.array + dg),
                                  internal_params=(s.theta[0] + dt,) + tuple(s.internal_params[1:]))
            grid.append(score(candidate))
    chosen = global_modification_search(cfg, agent, cfg.metagoal, 6, 5)
    assert score(chosen) <= min(grid) + 1e-6
    assert score(chosen) < score(s)


def runtests():
    test_spec_validation()
    test_history()
    test_goal_contraction_check()
    test_dynamic_contraction_check()
    test_project_into_ball()
    test_enforcement_always_contracts()
    test_enforcement_randomized()
    test_enforcement_keeps_allowed_proposals()
    test_moderated_check()
    test_drift_bounds()
    test_hybrid_policy()
    test_hybrid_policy_all_flag_settings()
    test_max_plausible_variation()
    test_moderate_variation_hits_target()
    test_global_search_respects_drift_bounds()
    test_global_search_validation()
    test_global_search_single_candidate_is_null()
    test_global_search_all_candidates_out_of_bounds()
    test_global_search_quadratic_well()
    test_modification_score()

if __name__ == '__main__':
    runtests()
