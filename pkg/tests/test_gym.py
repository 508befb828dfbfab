import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pmp.gym_hand import (ACTION_DIM, STATE_DIM, ExpertFileError, GraspGym, GymEpisodeConfig, HandSpec,
                          InteractionObserver, build_gym_sim, collect_expert_pairs, finger_reward,
                          gym_total_reward, load_expert_pairs, mcp_reward, rod_reward, sample_disturbance,
                          save_expert_pairs, state_layout, tip_reward, torque_reward, wrist_reward)
from pmp.trainer import GaussianPolicy, Trainer, PpoConfig

# -- reward terms: worked examples ---------------------------------------


def test_rod_reward_examples():
    assert rod_reward(0.0, 0.0) == 1.0
    assert rod_reward(1.0, 0.0) == pytest.approx(0.3 * math.exp(-1) + 0.7, abs=1e-12)
    assert rod_reward(1.0, 0.0) == pytest.approx(0.810364, abs=1e-6)
    assert rod_reward(0.0, math.sqrt(10)) == pytest.approx(0.557515, abs=1e-6)
    # a velocity vector uses its norm
    assert rod_reward(np.array([0.6, 0.8]), 0.0) == pytest.approx(rod_reward(1.0, 0.0), abs=1e-15)


def test_finger_reward_examples():
    assert finger_reward([0.0, 0.0, 0.0]) == 1.0
    assert finger_reward([0.1, 0.02, 0.0]) == pytest.approx(0.278037, abs=1e-6)
    base = finger_reward([0.1, 0.02, 0.03])
    assert finger_reward([0.1, 0.05, 0.0]) == base  # only the max matters


def test_mcp_and_tip_examples():
    assert mcp_reward(1.0) == 1.0
    assert mcp_reward(0.0) == pytest.approx(0.049787, abs=1e-6)
    assert mcp_reward(0.5) == pytest.approx(0.472367, abs=1e-6)
    assert tip_reward([1.0, 1.0]) == 1.0
    assert tip_reward([0.0, 1.0]) == pytest.approx(0.049787, abs=1e-6)
    assert tip_reward([-1.0, 0.5]) == pytest.approx(6.144e-6, rel=1e-3)


def test_wrist_reward_examples():
    assert wrist_reward(0.3, 0.3, 0.0) == 1.0
    assert wrist_reward(0.0, 1.0, 0.0) == pytest.approx(0.049787, abs=1e-6)
    q, qt, qd = 0.2, -0.4, 1.7
    assert wrist_reward(q, qt, qd) == pytest.approx(wrist_reward(q, qt, 0.0) * wrist_reward(0.0, 0.0, qd), abs=1e-15)


def test_torque_reward_examples():
    mask = np.array([False, True, False, True, False])
    assert torque_reward(np.zeros(5), mask) == 1.0
    tau = np.array([10.0, 3.0, 20.0, -7.0, math.sqrt(500 - 500)])
    tau[4] = 0.0
    tau[0], tau[2] = math.sqrt(250.0), math.sqrt(250.0)
    assert torque_reward(tau, mask) == pytest.approx(math.exp(-1), abs=1e-12)
    tau2 = tau.copy()
    tau2[mask] = [100.0, -50.0]  # MCP torques are excluded
    assert torque_reward(tau2, mask) == torque_reward(tau, mask)


def test_gym_total_examples():
    assert gym_total_reward(1, 1, 1, 1, 1, 1) == 1.0
    assert gym_total_reward(0, 1, 1, 1, 1, 1) == pytest.approx(0.05)
    assert gym_total_reward(1, 1, 1, 1, 1, 0.5) == pytest.approx(0.975, abs=1e-12)


# -- transcription oracle: scalar re-implementations on random inputs -----

def _rod(v, w):
    return 0.3 * math.exp(-v * v) + 0.7 * math.exp(-0.1 * w * w)


def _fin(d):
    m = max(d)
    return math.exp(-128.0 * m * m)


def _mcp(a):
    return math.exp(-3.0 * (1.0 - a) ** 2)


def _tip(dots):
    return math.exp(-3.0 * max((1.0 - x) ** 2 for x in dots))


def _wrist(q, qt, qd):
    return math.exp(-3.0 * (qt - q) ** 2) * math.exp(-0.1 * qd * qd)


def _tau(t, mask):
    return math.exp(-0.002 * sum(x * x for x, m in zip(t, mask) if not m))


def test_gym_reward_transcription_oracle():
    rng = np.random.default_rng(7)
    n = 1000
    mask = np.array([False, True, False, True, False])
    v, w = rng.normal(0, 1.5, n), rng.normal(0, 4, n)
    d = rng.uniform(0, 0.2, (n, 5))
    a = rng.uniform(0, 1, n)
    dots = rng.uniform(-1, 1, (n, 2))
    q, qt, qd = rng.normal(0, 0.5, n), rng.normal(0, 0.5, n), rng.normal(0, 3, n)
    tau = rng.normal(0, 15, (n, 5))
    # the wrist DoFs sit on the last axis: one single-DoF wrist per row
    got = [rod_reward(v, w), finger_reward(d), mcp_reward(a), tip_reward(dots),
           wrist_reward(q[:, None], qt[:, None], qd[:, None]),
           torque_reward(tau, mask)]
    want = [[_rod(v[i], w[i]) for i in range(n)], [_fin(d[i]) for i in range(n)], [_mcp(x) for x in a],
            [_tip(dots[i]) for i in range(n)], [_wrist(q[i], qt[i], qd[i]) for i in range(n)],
            [_tau(tau[i], mask) for i in range(n)]]
    for g, w_ in zip(got, want):
        np.testing.assert_allclose(g, w_, rtol=0, atol=1e-12)
    total = gym_total_reward(*got)
    ref = [0.95 * want[0][i] * want[1][i] * want[2][i] * want[3][i] * want[4][i] + 0.05 * want[5][i]
           for i in range(n)]
    np.testing.assert_allclose(total, ref, rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.lists(st.floats(0, 0.3), min_size=5, max_size=5),
       st.floats(0, 1), st.lists(st.floats(-1, 1), min_size=2, max_size=2), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-20, 20), st.lists(st.floats(-40, 40), min_size=5, max_size=5))
def test_gym_rewards_in_unit_interval(v, w, d, a, dots, q, qt, qd, tau):
    mask = np.array([False, True, False, True, False])
    terms = [rod_reward(v, w), finger_reward(d), mcp_reward(a), tip_reward(dots), wrist_reward(q, qt, qd),
             torque_reward(np.array(tau), mask)]
    for t in terms:
        assert 0.0 <= t <= 1.0
    # r_tau stays strictly positive for bounded torques, so the total does too
    assert 0.0 < gym_total_reward(*terms) <= 1.0


# -- interaction state ----------------------------------------------------

def _rot(a, v):
    c, s = math.cos(a), math.sin(a)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def test_state_layout_is_contiguous():
    lay = state_layout()
    spans = sorted((s.start, s.stop) for s in lay.values())
    assert spans[0][0] == 0 and spans[-1][1] == STATE_DIM
    assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
    assert STATE_DIM == 25 and ACTION_DIM == 5


def test_no_contact_gives_zero_flags_and_alignment():
    sim = build_gym_sim(GymEpisodeConfig())
    obs = InteractionObserver(sim, HandSpec(), "rod")
    st_ = sim.new_state(2)
    st_.root[:] = [0.0, 1.0, 0.0]
    st_.obj_pose[:, 0] = [1.0, 2.0, 0.3]  # far from the hand
    st_ = sim.step(st_, np.zeros(5))
    u = obs.state(st_)
    lay = state_layout()
    assert (u[:, lay["contact"]] == 0).all()
    assert (u[:, lay["align"]] == 0).all()


def test_interaction_state_translation_invariant():
    sim = build_gym_sim(GymEpisodeConfig())
    obs = InteractionObserver(sim, HandSpec(), "rod")
    rng = np.random.default_rng(3)
    st_ = sim.new_state(4)
    st_.root[:, :2] = [0.0, 1.0]
    st_.q[:] = rng.uniform(-0.3, 1.0, (4, 5))
    st_.qd[:] = rng.normal(0, 1, (4, 5))
    st_.obj_pose[:, 0] = np.c_[rng.uniform(0.0, 0.1, 4), 1.0 + rng.uniform(-0.05, 0.05, 4), rng.uniform(-3, 3, 4)]
    moved = st_.copy()
    shift = np.array([3.7, -1.25])
    moved.root[:, :2] += shift
    moved.obj_pose[:, 0, :2] += shift
    np.testing.assert_allclose(obs.state(moved), obs.state(st_), atol=1e-12)


def test_interaction_state_matches_hand_transform():
    """Fingertips and rod end points against a direct chain of planar rotations."""
    sim = build_gym_sim(GymEpisodeConfig())
    obs = InteractionObserver(sim, HandSpec(), "rod")
    st_ = sim.new_state(1)
    root = np.array([0.3, 1.1, 0.4])
    q = np.array([0.25, 0.6, 0.4, 0.9, 0.2])  # wrist, mcp_a, dip_a, mcp_b, dip_b
    rod = np.array([0.36, 1.15, 0.7])
    st_.root[0], st_.q[0], st_.obj_pose[0, 0] = root, q, rod
    u = obs.state(st_)[0]
    lay = state_layout()

    # forearm at the root; palm turns by +wrist; finger a bends by -q, finger b by +q
    phi_p = root[2] + q[0]
    org_p = root[:2]

    def tip(sign, anchor, q_mcp, q_dip):
        phi1 = phi_p + sign * q_mcp
        o1 = org_p + _rot(phi_p, anchor)
        phi2 = phi1 + sign * q_dip
        o2 = o1 + _rot(phi1, (0.05, 0.0))
        return o2 + _rot(phi2, (0.04, 0.0))

    tips = [tip(-1, (0.02, 0.04), q[1], q[2]), tip(+1, (0.02, -0.04), q[3], q[4])]
    want_tips = np.concatenate([_rot(-phi_p, t - org_p) for t in tips])
    np.testing.assert_allclose(u[lay["tips"]], want_tips, atol=1e-12)
    d = 0.025 * np.array([math.cos(rod[2]), math.sin(rod[2])])
    ends = [rod[:2] - d, rod[:2] + d]
    want_rod = np.concatenate([_rot(-phi_p, e - org_p) for e in ends])
    np.testing.assert_allclose(u[lay["rod"]], want_rod, atol=1e-12)
    np.testing.assert_array_equal(u[lay["q"]], q)


def test_alignment_features_bounded_in_contact():
    env = GraspGym(8)
    env.reset(np.random.default_rng(0))
    closed = np.ones((8, 5))
    closed[:, 0] = 0.0
    lay = state_layout()
    seen_contact = False
    for _ in range(20):
        obs, r, done, info = env.step(closed)
        u = obs[:, :STATE_DIM]
        assert set(np.unique(u[:, lay["contact"]])) <= {0.0, 1.0}
        assert (np.abs(u[:, lay["align"]]) <= 1.0 + 1e-12).all()
        seen_contact |= bool(u[:, lay["contact"]].any())
    assert seen_contact


# -- disturbances -----------------------------------------------------------

def test_disturbance_statistics():
    cfg = GymEpisodeConfig()
    rng = np.random.default_rng(11)
    f, tq = sample_disturbance(cfg, rng, 10_000)
    mag = np.linalg.norm(f, axis=1) * cfg.force_scale
    assert mag.min() >= 50.0 - 1e-9 and mag.max() <= 100.0 + 1e-9
    assert abs(mag.mean() - 75.0) <= 0.02 * 75.0
    assert (np.abs(tq * cfg.torque_scale) <= 30.0 + 1e-9).all()
    ang = np.arctan2(f[:, 1], f[:, 0])
    counts, _ = np.histogram(ang, bins=36, range=(-np.pi, np.pi))
    assert stats.chisquare(counts).pvalue > 0.01


def test_disturbance_collapsed_range_is_constant():
    cfg = GymEpisodeConfig(force_range=(80.0, 80.0), torque_range=(5.0, 5.0))
    f, tq = sample_disturbance(cfg, np.random.default_rng(0), 100)
    np.testing.assert_allclose(np.linalg.norm(f, axis=1), 8.0, rtol=1e-12)
    np.testing.assert_allclose(tq, 0.05, rtol=1e-12)


def test_episode_config_validation():
    with pytest.raises(ValueError):
        GymEpisodeConfig(force_range=(100.0, 50.0))
    with pytest.raises(ValueError):
        GymEpisodeConfig(disturb_hz=0.0)
    with pytest.raises(ValueError):
        GymEpisodeConfig(episode_steps=0)


# -- environment ------------------------------------------------------------

def test_gym_env_steps_and_rewards():
    env = GraspGym(4)
    obs = env.reset(np.random.default_rng(0))
    assert obs.shape == (4, env.obs_dim) and env.act_dim == 5
    dones = 0
    for t in range(env.max_steps):
        obs, r, done, info = env.step(np.zeros((4, 5)))
        assert ((r > 0) & (r <= 1)).all()
        assert set(info["components"]) == {"r_rod", "r_fin", "r_mcp", "r_tip", "r_wrist", "r_tau"}
        dones += int(done.sum())
    assert dones >= 4  # every world finishes within the episode length


def test_gym_terminates_when_rod_is_lost():
    env = GraspGym(2)
    env.reset(np.random.default_rng(0))
    env.state.obj_pose[0, 0, :2] += [0.5, 0.0]
    _, r, done, info = env.step(np.zeros((2, 5)))
    assert done[0] and info["reasons"][0] == "rod_lost" and info["terminal"][0]
    assert not done[1]


# -- expert pairs -------------------------------------------------------------

def _policy(env, seed=0):
    return GaussianPolicy(env.obs_dim, env.act_dim, (32, 32), rng=np.random.default_rng(seed))


def test_expert_zero_episodes_gives_valid_empty_file(tmp_path):
    env = GraspGym(2)
    pairs = collect_expert_pairs(_policy(env), env, 0, path=tmp_path / "e.json")
    assert pairs.shape == (0, STATE_DIM + ACTION_DIM)
    back, meta = load_expert_pairs(tmp_path / "e.json")
    assert back.shape == (0, STATE_DIM + ACTION_DIM) and meta["episodes"] == 0


def test_expert_pair_bound_and_round_trip(tmp_path):
    env = GraspGym(3)
    n_ep = 4
    pairs = collect_expert_pairs(_policy(env), env, n_ep, rng=np.random.default_rng(1), path=tmp_path / "e.json")
    assert 0 < len(pairs) <= n_ep * env.max_steps
    assert pairs.shape[1] == STATE_DIM + ACTION_DIM
    back, _ = load_expert_pairs(tmp_path / "e.json")
    assert back.dtype == pairs.dtype and np.array_equal(back, pairs)
    assert back.tobytes() == pairs.tobytes()
    # the contact filter: no state can have more touching links than the hand owns
    none = collect_expert_pairs(_policy(env), env, n_ep, rng=np.random.default_rng(1), min_contacts=6)
    assert none.shape == (0, STATE_DIM + ACTION_DIM)


def test_expert_from_checkpoint_and_missing_checkpoint(tmp_path):
    env = GraspGym(2)
    tr = Trainer(env, PpoConfig(n_envs=2, hidden=(16, 16)), seed=0)
    tr.save(tmp_path / "gym.npz")
    a = collect_expert_pairs(tmp_path / "gym.npz", env, 2, rng=np.random.default_rng(0))
    b = collect_expert_pairs(tr.policy, env, 2, rng=np.random.default_rng(0))
    assert np.array_equal(a, b)
    with pytest.raises(FileNotFoundError):
        collect_expert_pairs(tmp_path / "missing.npz", env, 1)


def test_expert_file_rejects_foreign_documents(tmp_path):
    p = tmp_path / "clip.json"
    p.write_text(json.dumps({"format_version": 1, "kind": "motion_clip", "pairs": []}))
    with pytest.raises(ExpertFileError):
        load_expert_pairs(p)
    save_expert_pairs(tmp_path / "ok.json", np.zeros((1, STATE_DIM + ACTION_DIM)))
    doc = json.loads((tmp_path / "ok.json").read_text())
    doc["layout"]["state_dim"] = 24
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(ExpertFileError):
        load_expert_pairs(tmp_path / "bad.json")
    with pytest.raises(FileNotFoundError):
        load_expert_pairs(tmp_path / "nope.json")
