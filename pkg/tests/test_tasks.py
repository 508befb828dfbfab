import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pmp.gym_hand import ACTION_DIM, STATE_DIM, save_expert_pairs
from pmp.tasks import (CART_TRACKING, HANG_DEADLINE, CartConfig, CartPullEnv, GraspHoldConfig, GraspHoldEnv,
                       PointReachEnv, SplitWalkerConfig, SplitWalkerEnv, TargetLocationParams, TerminationRule,
                       TerminationTracker, balance_reward, barbell_task_reward, barbell_tracking_reward,
                       cart_task_reward, cart_tracking_reward, check_termination, climb_task_reward,
                       cosine_indicator, hand_reach_reward, hang_task_reward, heading_reward, sight_reward,
                       sight_task_reward, target_location_reward, torque_min_reward, wrap_angle)

# -- worked examples --------------------------------------------------------


def test_target_location_examples():
    assert target_location_reward([0.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0)
    p = np.array([1.0, 1.0])
    v = 3.0 * p / np.sqrt(2)
    assert target_location_reward(p, v) == pytest.approx(0.7 * math.exp(-1) + 0.3, abs=1e-12)
    assert target_location_reward(p, v) == pytest.approx(0.557516, abs=1e-6)
    far = np.array([1e3, 0.0])
    assert target_location_reward(far, [1.0, 0.0]) == pytest.approx(0.3 * math.exp(-1), abs=1e-12)


def test_sight_examples():
    assert sight_reward(0.4, 0.4) == 1.0
    assert sight_reward(1.0, 0.0) == pytest.approx(0.135335, abs=1e-6)
    assert sight_reward(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(math.exp(-0.08), abs=1e-12)
    assert sight_reward(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(0.923116, abs=1e-6)
    assert sight_task_reward(1.0, 1.0) == pytest.approx(1.0)


def test_wrap_angle_range():
    a = np.linspace(-20, 20, 1001)
    w = wrap_angle(a)
    assert (w >= -math.pi).all() and (w < math.pi).all()
    np.testing.assert_allclose(np.cos(w), np.cos(a), atol=1e-12)


def test_heading_examples():
    assert heading_reward([0.6, 0.0], 0.0, 0.5) == 1.0
    assert heading_reward([0.0, 0.0], 0.0, 0.5) == pytest.approx(0.778801, abs=1e-6)
    assert heading_reward([0.0, 0.0], [1.0, 0.0], 0.3) == pytest.approx(0.913931, abs=1e-6)
    # heading as angle and as unit vector agree
    assert heading_reward([0.2, 0.1], math.pi / 2, 0.5) == pytest.approx(heading_reward([0.2, 0.1], [0, 1], 0.5))


def test_hand_reach_examples():
    zero = np.zeros((2, 2))
    assert hand_reach_reward(zero, [1.0, 1.0], 10.0) == 1.0
    assert hand_reach_reward(zero, [1.0, 0.0], 10.0) == 0.0
    p = np.array([[0.1, 0.0], [0.2, 0.0]])
    assert hand_reach_reward(p, [1.0, 1.0], 10.0) == pytest.approx(0.606531, abs=1e-6)


def test_cart_examples():
    assert cart_task_reward(1.0, 1.0) == pytest.approx(1.0)
    assert cart_task_reward(0.0, 0.7) == 0.0
    assert cart_task_reward(1.0, 0.5) == pytest.approx(0.6)
    assert CART_TRACKING == TargetLocationParams(0.5, 0.5, 64.0, 0.8, 0.2)
    assert cart_tracking_reward([0.0, 0.0], [0.0, 0.0]) == pytest.approx(1.0)


def test_hang_examples():
    zero = np.zeros((2, 2))
    assert hang_task_reward(zero, [1.0, 1.0]) == 1.0
    assert hang_task_reward(zero, [0.0, 1.0]) == 0.0
    p = np.array([[0.5, 0.0], [0.0, 0.0]])
    assert hang_task_reward(p, [1.0, 1.0]) == pytest.approx(0.472367, abs=1e-6)


def test_barbell_examples():
    assert barbell_task_reward(1.0, 1.0, 1.0) == pytest.approx(1.0)
    assert barbell_task_reward(0.0, 1.0, 1.0) == pytest.approx(0.2)
    assert barbell_task_reward(1.0, 1.0, 0.5) == pytest.approx(0.5)
    assert balance_reward(0.0) == 1.0
    assert balance_reward(0.5) == pytest.approx(math.exp(-1.0))
    assert barbell_tracking_reward(0.0, 0.0) == pytest.approx(1.0)


def test_climb_examples():
    zero = np.zeros((2, 2))
    assert climb_task_reward(zero, [1.0, 1.0], True) == pytest.approx(1.0)
    far = np.full((2, 2), 1e3)
    assert climb_task_reward(far, [1.0, 1.0], False) == pytest.approx(0.0025, abs=1e-15)
    assert climb_task_reward(zero, [0.0, 1.0], True) == 0.0
    # the first hang uses the tighter kernel
    p = np.array([[0.1, 0.0], [0.0, 0.0]])
    assert climb_task_reward(p, [1, 1], True) < climb_task_reward(p, [1, 1], False)


def test_cosine_indicator():
    assert cosine_indicator([1.0, 0.0], [2.0, 0.0]) == pytest.approx(1.0)
    assert cosine_indicator([1.0, 0.0], [-1.0, 0.0]) == pytest.approx(0.0)
    assert cosine_indicator([1.0, 0.0], [0.0, 3.0]) == pytest.approx(0.5)


# -- straight-line transcription ---------------------------------------------------


def ref_target(px, py, vx, vy, vs, gp, gv, wp, wv):
    n = math.sqrt(px * px + py * py)
    r_pos = math.exp(-gp * (px * px + py * py))
    if n == 0:
        r_vel = 1.0
    else:
        proj = (vx * px + vy * py) / n
        r_vel = math.exp(-gv * max(0.0, vs - proj) ** 2)
    return wp * r_pos + wv * r_vel


def ref_wrap(d):
    while d >= math.pi:
        d -= 2 * math.pi
    while d < -math.pi:
        d += 2 * math.pi
    return d


def test_task_formulas_match_transcription():
    g = np.random.default_rng(42)
    n = 1000
    p = g.normal(0, 1.5, (n, 2))
    v = g.normal(0, 2.0, (n, 2))
    out = target_location_reward(p, v)
    cart = cart_tracking_reward(p, v)
    for i in range(n):
        assert abs(out[i] - ref_target(*p[i], *v[i], 2.0, 0.5, 1.0, 0.7, 0.3)) <= 1e-12
        assert abs(cart[i] - ref_target(*p[i], *v[i], 0.5, 0.5, 64.0, 0.8, 0.2)) <= 1e-12

    qg, qh = g.uniform(-10, 10, n), g.uniform(-10, 10, n)
    s = sight_reward(qg, qh)
    for i in range(n):
        assert abs(s[i] - math.exp(-2.0 * ref_wrap(qg[i] - qh[i]) ** 2)) <= 1e-12

    head = g.uniform(-4, 4, n)
    vstar = g.choice([0.5, 0.3], n)
    h = heading_reward(v, head, vstar)
    for i in range(n):
        proj = v[i, 0] * math.cos(head[i]) + v[i, 1] * math.sin(head[i])
        assert abs(h[i] - math.exp(-max(0.0, vstar[i] - proj) ** 2)) <= 1e-12

    ph = g.normal(0, 0.4, (n, 2, 2))
    c = g.random((n, 2))
    gam = g.choice([3.0, 10.0], n)
    rh = hand_reach_reward(ph, c, gam[:, None])
    first = g.random(n) < 0.5
    rc = climb_task_reward(ph, c, first)
    for i in range(n):
        ref = 1.0
        refc = 1.0
        gc = 128.0 if first[i] else 16.0
        for k in range(2):
            d2 = ph[i, k, 0] ** 2 + ph[i, k, 1] ** 2
            ref *= c[i, k] * math.exp(-gam[i] * d2)
            refc *= c[i, k] * (0.95 * math.exp(-gc * d2) + 0.05)
        assert abs(rh[i] - ref) <= 1e-12
        assert abs(rc[i] - refc) <= 1e-12

    a, b, r = g.random(n), g.random(n), g.random(n)
    ct = cart_task_reward(r, a)
    bt = barbell_task_reward(a, b, r)
    tilt = g.normal(0, 1, n)
    bal = balance_reward(tilt)
    for i in range(n):
        assert abs(ct[i] - r[i] * (0.8 * a[i] + 0.2)) <= 1e-12
        assert abs(bt[i] - r[i] * (0.8 * a[i] * b[i] + 0.2)) <= 1e-12
        assert abs(bal[i] - math.exp(-4.0 * tilt[i] ** 2)) <= 1e-12


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(arrays(float, (2,), elements=finite), arrays(float, (2,), elements=finite),
       arrays(float, (2, 2), elements=finite), arrays(float, (2,), elements=st.floats(0, 1)), st.booleans(),
       st.floats(-100, 100), st.floats(-100, 100))
def test_task_rewards_lie_in_unit_interval(p, v, ph, c, first, q1, q2):
    vals = [target_location_reward(p, v), cart_tracking_reward(p, v), sight_reward(q1, q2),
            heading_reward(v, q1, 0.5), hand_reach_reward(ph, c, 10.0), hang_task_reward(ph, (c > 0.5) * 1.0),
            climb_task_reward(ph, c, first), balance_reward(q1), barbell_tracking_reward(q1, q2),
            cosine_indicator(p, v), torque_min_reward(ph.ravel())]
    a, b = c
    vals += [cart_task_reward(a, b), barbell_task_reward(a, b, a), sight_task_reward(a, b)]
    for x in vals:
        assert 0.0 <= float(x) <= 1.0


# -- termination -----------------------------------------------------------------


def test_termination_examples():
    rule = TerminationRule(fall=True)
    out, why = check_termination(rule, [False], [True], 3.0)
    assert not out[0] and why[0] == ""
    out, why = check_termination(rule, [True], [False], 0.1)
    assert out[0] and why[0] == "fall"
    hang = TerminationRule(fall=False, ground_deadline=HANG_DEADLINE)
    assert HANG_DEADLINE == 0.7
    out, why = check_termination(hang, [False, False, False], [True, True, False], [0.71, 0.69, 5.0])
    assert list(out) == [True, False, False] and why[0] == "deadline"
    drop = TerminationRule(fall=False, ball_drop=True, ball_min_height=0.3)
    out, why = check_termination(drop, [False, False], [False, False], 1.0, [0.2, 0.5])
    assert list(out) == [True, False] and why[0] == "ball_drop"


def test_termination_rule_validation():
    with pytest.raises(ValueError):
        TerminationRule(ground_deadline=0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans(), st.floats(0, 2)), min_size=1, max_size=30))
def test_termination_is_monotone(trace):
    tr = TerminationTracker(TerminationRule(fall=True, ground_deadline=0.7), 1)
    was = False
    for fall, feet, t in trace:
        now, _ = tr([fall], [feet], t)
        assert now[0] or not was
        was = bool(now[0])
    tr.reset([0])
    assert not tr.triggered[0]


# -- runnable scenes -------------------------------------------------------------------


def fake_expert(tmp_path, n=40):
    g = np.random.default_rng(0)
    return str(save_expert_pairs(tmp_path / "expert.json", g.normal(0, 0.1, (n, STATE_DIM + ACTION_DIM))))


def step_random(env, steps, seed=0):
    g = np.random.default_rng(seed)
    obs = env.reset(g)
    assert obs.shape == (env.n_envs, env.obs_dim)
    for _ in range(steps):
        obs, r, d, info = env.step(g.uniform(-1, 1, (env.n_envs, env.act_dim)))
        assert np.isfinite(obs).all() and ((r >= 0) & (r <= 1)).all()
        assert len(info["part_pairs"]) == len(env.part_dims)
        assert len(info["hand_pairs"]) == len(env.hand_dims)
    return info


def test_point_reach_steps():
    env = PointReachEnv(4)
    env.reset(np.random.default_rng(0))
    _, r, d, _ = env.step(np.zeros((4, 2)))
    assert ((r > 0) & (r <= 1)).all() and not d.any()


def test_walker_scene():
    env = SplitWalkerEnv(3, SplitWalkerConfig(episode_steps=5))
    info = step_random(env, 6)
    assert env.part_dims and len(env.demo_pairs()) == 2
    assert all(len(d) for d in env.demo_pairs())
    assert len(info["monitor_pairs"]) == 2
    whole = SplitWalkerEnv(2, SplitWalkerConfig(prior="whole"))
    assert len(whole.part_dims) == 1 and len(whole.monitor_demo_pairs()) == 2
    with pytest.raises(ValueError):
        SplitWalkerConfig(prior="bogus")


def test_cart_scene(tmp_path):
    env = CartPullEnv(2, CartConfig(expert_path=fake_expert(tmp_path), episode_steps=4))
    info = step_random(env, 5)
    assert set(info["components"]) == {"r_hand", "r_cart"}
    assert env.hand_dims == [STATE_DIM + ACTION_DIM] * 2
    demo = env.demo_pairs()
    assert [d.shape[1] for d in demo] == [2 * d for d in env.part_dims] + env.hand_dims


def test_grasp_hold_scene(tmp_path):
    env = GraspHoldEnv(2, GraspHoldConfig(expert_path=fake_expert(tmp_path), episode_steps=4))
    step_random(env, 5)
    assert len(env.demo_pairs()) == 3
    with pytest.raises(ValueError):
        GraspHoldConfig(rod_x=5.0)


def test_missing_expert_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        CartPullEnv(1).demo_pairs()
    with pytest.raises(FileNotFoundError):
        GraspHoldEnv(1, GraspHoldConfig(expert_path=str(tmp_path / "nope.json"))).demo_pairs()
