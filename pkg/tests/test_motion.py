import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pmp.motion import (STYLE_PERIOD, WALKER_JOINTS, ClipError, MotionClip, Part, PartBuffers,
                        PartObserver, PartSpec, PartSpecError, RingBuffer, clip_to_demo_pairs,
                        demo_blend, extract_part_obs, generate_procedural_clip, load_clip,
                        sample_reference_init, save_clip, whole_body_spec)
from pmp.sim import BodyDef, Simulator, build_model, builtin_body
from pmp.sim.body import JointDef, LinkDef


def three_joint_body():
    links = [LinkDef("base", 1.0, (0.1, 0.05)), LinkDef("a", 1.0, (0.2, 0.02), com=(0.2, 0.0)),
             LinkDef("b", 1.0, (0.15, 0.02), com=(0.15, 0.0)), LinkDef("c", 1.0, (0.1, 0.02), com=(0.1, 0.0))]
    joints = [JointDef("j0", "base", "a", (0.1, 0.0), (-3, 3), 10.0, axis=1, rest=0.2),
              JointDef("j1", "a", "b", (0.4, 0.0), (-3, 3), 10.0, axis=-1),
              JointDef("j2", "b", "c", (0.3, 0.0), (-3, 3), 10.0, axis=1, rest=-0.1)]
    gains = {n: 1.0 for n in ("j0", "j1", "j2")}
    return BodyDef("toy", links, joints, "floating", gains, gains, {"tip": [["c", [0.2, 0.0]]]})


def toy_observer(include_root=False):
    model = build_model(three_joint_body())
    spec = PartSpec([Part("arm", ("j0", "j2"), ("clip",), (("c", (0.2, 0.0)), ("b", (0.3, 0.0))),
                          include_root=include_root, is_base=True),
                     Part("mid", ("j1",), ("clip",))])
    return model, PartObserver(model, spec)


def hand_extraction(root, q, qd):
    # independent chain walk with scalar trig, anchors/rests/axes typed in by hand
    x, y, th = root
    th_a = th + 0.2 + q[0]
    ax, ay = x + 0.1 * math.cos(th), y + 0.1 * math.sin(th)
    th_b = th_a - q[1]
    bx, by = ax + 0.4 * math.cos(th_a), ay + 0.4 * math.sin(th_a)
    th_c = th_b - 0.1 + q[2]
    cx, cy = bx + 0.3 * math.cos(th_b), by + 0.3 * math.sin(th_b)
    tip = (cx + 0.2 * math.cos(th_c), cy + 0.2 * math.sin(th_c))
    bend = (bx + 0.3 * math.cos(th_b), by + 0.3 * math.sin(th_b))
    out = [q[0], q[2], qd[0], qd[2]]
    for px, py in (tip, bend):
        dx, dy = px - x, py - y
        out += [math.cos(th) * dx + math.sin(th) * dy, -math.sin(th) * dx + math.cos(th) * dy]
    return np.array(out)


# -- clips --------------------------------------------------------------

def test_procedural_clip_frame_count_and_velocity():
    clip = generate_procedural_clip("gait", 1.0)
    assert clip.n_frames == 30
    np.testing.assert_allclose(clip.qd[:-1], (clip.q[1:] - clip.q[:-1]) * 30.0, atol=1e-9)
    for style in ("carry_idle", "wave"):
        c = generate_procedural_clip(style, 2.0, np.random.default_rng(1))
        np.testing.assert_allclose(c.qd[:-1], (c.q[1:] - c.q[:-1]) * 30.0, atol=1e-9)


def test_gait_is_periodic():
    clip = generate_procedural_clip("gait", 3.0, np.random.default_rng(5))
    lag = int(round(STYLE_PERIOD["gait"] * 30))
    err = np.abs(clip.q[lag:] - clip.q[:-lag]).max()
    assert err < 1e-6
    # the lag that minimizes the mismatch over half a period to 1.5 periods is the period
    lags = range(15, 46)
    mism = [np.abs(clip.q[L:] - clip.q[:-L]).mean() for L in lags]
    assert list(lags)[int(np.argmin(mism))] == lag


def test_procedural_clip_within_walker_limits():
    a = build_model(builtin_body("walker")).arrays
    for style in ("gait", "carry_idle", "wave"):
        c = generate_procedural_clip(style, 2.0, np.random.default_rng(0))
        assert (c.q >= a.q_lo).all() and (c.q <= a.q_hi).all()


def test_procedural_clip_errors():
    with pytest.raises(ClipError):
        generate_procedural_clip("gait", 0.0)
    with pytest.raises(ClipError):
        generate_procedural_clip("moonwalk", 1.0)


def test_clip_validation():
    with pytest.raises(ClipError):
        MotionClip("x", 30.0, ("a",), np.zeros((1, 3)), np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(ClipError):
        MotionClip("x", 30.0, ("a",), np.zeros((2, 3)), [[0.0], [np.nan]], np.zeros((2, 1)))
    with pytest.raises(ClipError):
        MotionClip("x", 30.0, ("a", "b"), np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((2, 1)))


def test_clip_file_round_trip(tmp_path):
    clip = generate_procedural_clip("wave", 1.0, np.random.default_rng(2))
    save_clip(clip, tmp_path / "w.json")
    again = load_clip(tmp_path / "w.json")
    assert again.joints == clip.joints and again.fps == clip.fps
    for name in ("root", "q", "qd"):
        assert np.array_equal(getattr(again, name), getattr(clip, name))
    (tmp_path / "bad.json").write_text('{"format_version": 2}')
    with pytest.raises(ClipError):
        load_clip(tmp_path / "bad.json")


def test_resample_halves_sixty_hz_clip():
    fine = generate_procedural_clip("gait", 2.0, fps=60.0)
    pairs_fine = fine.n_frames - 1
    coarse = fine.resample(30.0)
    assert abs((coarse.n_frames - 1) - pairs_fine / 2) <= 1
    # linear interpolation oracle: 30 Hz samples land on every other 60 Hz frame
    np.testing.assert_allclose(coarse.q, fine.q[::2][:coarse.n_frames], atol=1e-12)


# -- demo pairs ---------------------------------------------------------

def _toy_clip(n):
    rng = np.random.default_rng(n)
    return MotionClip("clip", 30.0, ("j0", "j1", "j2"), np.c_[np.zeros((n, 2)), np.zeros(n)],
                      rng.normal(size=(n, 3)), rng.normal(size=(n, 3)))


def test_demo_pair_counts():
    _, obs = toy_observer()
    for n, expect in ((2, 1), (31, 30)):
        pairs = clip_to_demo_pairs(_toy_clip(n), obs)
        assert [len(p) for p in pairs] == [expect, expect]
        assert [p.shape[1] for p in pairs] == [2 * d for d in obs.dims]
    # pair rows are consecutive feature vectors
    pairs = clip_to_demo_pairs(_toy_clip(5), obs)
    d = obs.dims[0]
    np.testing.assert_array_equal(pairs[0][:-1, d:], pairs[0][1:, :d])


def test_demo_pairs_after_resampling():
    _, obs = toy_observer()
    c = _toy_clip(61)
    c60 = MotionClip("clip", 60.0, c.joints, c.root, c.q, c.qd)
    assert abs(len(clip_to_demo_pairs(c60, obs)[0]) - 60 / 2) <= 1


# -- part features ------------------------------------------------------

def test_partspec_validation():
    with pytest.raises(PartSpecError):
        PartSpec([Part("a", ("j0",), ("c",)), Part("b", ("j0", "j1"), ("c",))])
    with pytest.raises(PartSpecError):
        PartSpec([Part("a", ("j0",), ("c",))], joints=("j0", "j1"))
    with pytest.raises(PartSpecError):
        PartSpec([Part("a", ("j0",), ())])
    PartSpec([Part("hand", ("j0",), (), is_hand=True)])


def test_features_match_hand_extraction(rng):
    model, obs = toy_observer()
    sim = Simulator(model)
    for _ in range(20):
        s = sim.new_state()
        s.root[0] = rng.normal(size=3)
        s.q[0] = rng.uniform(-2, 2, 3)
        s.qd[0] = rng.normal(size=3)
        f = extract_part_obs(obs, s, 0)[0]
        np.testing.assert_allclose(f, hand_extraction(s.root[0], s.q[0], s.qd[0]), atol=1e-12)
        np.testing.assert_array_equal(extract_part_obs(obs, s, 1)[0], [s.q[0, 1], s.qd[0, 1]])
    with pytest.raises(IndexError):
        extract_part_obs(obs, s, 2)


def test_zero_state_features():
    model, obs = toy_observer()
    f = extract_part_obs(obs, Simulator(model).new_state(), 0)[0]
    assert not f[:4].any()
    np.testing.assert_allclose(f[4:], hand_extraction((0, 0, 0), (0, 0, 0), (0, 0, 0))[4:], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_translation_invariance(dx, dy):
    model, obs = toy_observer()
    rng = np.random.default_rng(0)
    root = np.array([[0.3, -0.2, 0.7]])
    q, qd = rng.normal(size=(1, 3)), rng.normal(size=(1, 3))
    a = obs.features(root, q, qd)
    b = obs.features(root + [dx, dy, 0.0], q, qd)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, atol=1e-9)


def test_walker_default_features_are_root_local():
    body = builtin_body("walker")
    model = build_model(body)
    spec = PartSpec([Part("lower", WALKER_JOINTS[:4], ("gait",), body.markers["feet"], is_base=True),
                     Part("upper", WALKER_JOINTS[4:], ("wave",), body.markers["hands"])])
    obs = PartObserver(model, spec)
    assert obs.dims == [12, 12]


# -- reference-state initialization ------------------------------------

def test_reference_init_k1_is_standard_rsi():
    clip = generate_procedural_clip("gait", 1.0)
    spec = whole_body_spec(WALKER_JOINTS, ("gait",))
    root, q, qd, picks = sample_reference_init(spec, {"gait": clip}, np.random.default_rng(0), WALKER_JOINTS, n=50)
    f = picks[0][:, 1]
    np.testing.assert_array_equal(q, clip.q[f])
    np.testing.assert_array_equal(qd, clip.qd[f])
    np.testing.assert_array_equal(root, clip.root[f])


def test_reference_init_single_frame_clips_composite():
    def one(name, val):
        return MotionClip(name, 30.0, WALKER_JOINTS, [[0, 0.9, 0]] * 2, np.full((2, 8), val), np.zeros((2, 8)))

    clips = {"lo": one("lo", 0.1), "up": one("up", 0.7)}
    clips["lo"].q[1] = 0.1
    clips["up"].q[1] = 0.7
    spec = PartSpec([Part("lower", WALKER_JOINTS[:4], ("lo",), is_base=True), Part("upper", WALKER_JOINTS[4:], ("up",))])
    _, q, _, _ = sample_reference_init(spec, clips, np.random.default_rng(3), WALKER_JOINTS, n=20)
    np.testing.assert_array_equal(q, np.tile([0.1] * 4 + [0.7] * 4, (20, 1)))


def test_reference_init_frames_uniform_and_independent():
    clips = {"gait": generate_procedural_clip("gait", 1.0), "wave": generate_procedural_clip("wave", 1.0)}
    spec = PartSpec([Part("lower", WALKER_JOINTS[:4], ("gait",), is_base=True),
                     Part("upper", WALKER_JOINTS[4:], ("wave",))])
    _, _, _, picks = sample_reference_init(spec, clips, np.random.default_rng(11), WALKER_JOINTS, n=10_000)
    for p in picks:
        counts = np.bincount(p[:, 1], minlength=30)
        assert stats.chisquare(counts).pvalue > 0.01
    # independence across parts: 2 x 2 contingency on first/second half of the clip
    lo, up = picks[0][:, 1] < 15, picks[1][:, 1] < 15
    table = np.array([[np.sum(lo & up), np.sum(lo & ~up)], [np.sum(~lo & up), np.sum(~lo & ~up)]])
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_reference_init_empty_clip_list():
    spec = PartSpec([Part("hand", ("j0",), (), is_hand=True), Part("arm", ("j1",), ("c",))])
    spec.parts[1].clips = ()
    with pytest.raises(ClipError):
        sample_reference_init(spec, {}, np.random.default_rng(0), ("j0", "j1"))


# -- buffers and demo blend ----------------------------------------------

def test_ring_buffer_fifo_and_capacity():
    b = RingBuffer(1, 5)
    for i in range(12):
        b.add([[float(i)]])
        assert len(b) <= 5
    np.testing.assert_array_equal(b.ordered()[:, 0], [7, 8, 9, 10, 11])
    b.add(np.arange(100, 103)[:, None])
    np.testing.assert_array_equal(b.ordered()[:, 0], [10, 11, 100, 101, 102])
    big = RingBuffer(2, 3000)
    big.add(np.ones((2500, 2)))
    big.add(np.zeros((1000, 2)))
    assert len(big) == 3000 and big.ordered()[-1000:].sum() == 0 and big.ordered()[:2000].min() == 1


def test_ring_buffer_sampling_uniform():
    b = RingBuffer(1, 100)
    b.add(np.arange(100.0)[:, None])
    draws = b.sample(100_000, np.random.default_rng(0))[:, 0].astype(int)
    counts = np.bincount(draws, minlength=100)
    p = 1 / 100
    sigma = math.sqrt(100_000 * p * (1 - p))
    assert np.abs(counts - 100_000 * p).max() < 3.0 * sigma
    assert stats.chisquare(counts).pvalue > 0.01


def _demo_buffers():
    demo = PartBuffers([2, 3], 1000)
    demo.add([np.full((50, 2), 7.0), np.full((50, 3), 9.0)])
    return demo


def test_demo_blend_extremes():
    demo = _demo_buffers()
    rng = np.random.default_rng(0)
    agent = [rng.normal(size=(40, 2)), rng.normal(size=(40, 3))]
    same = demo_blend(agent, demo, 0.0, rng)
    for a, b in zip(agent, same):
        assert np.array_equal(a, b)
    full = demo_blend(agent, demo, 1.0, rng)
    assert (full[0] == 7.0).all() and (full[1] == 9.0).all()
    with pytest.raises(ValueError):
        demo_blend(agent, demo, 1.5, rng)


def test_demo_blend_rate_and_no_mutation():
    demo = _demo_buffers()
    before = [b.ordered() for b in demo.buffers]
    agent = [np.zeros((100_000, 2)), np.zeros((100_000, 3))]
    out, masks = demo_blend(agent, demo, 0.1, np.random.default_rng(9), return_masks=True)
    for k in range(2):
        rate = masks[k].mean()
        assert 0.094 <= rate <= 0.106
        assert (out[k][masks[k]] != 0).all() and not out[k][~masks[k]].any()
    assert not (masks[0] == masks[1]).all()
    assert not agent[0].any()
    for b, a in zip(demo.buffers, before):
        assert np.array_equal(b.ordered(), a)
