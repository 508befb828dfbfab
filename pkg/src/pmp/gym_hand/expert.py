"""Expert interaction pairs (u, y) exported from a trained gym policy.

File layout (JSON, same container family as motion clips)::

    {"format_version": 1, "kind": "expert_pairs",
     "layout": {"state": {"q": [0, 5], ...}, "state_dim": 25, "action_dim": 5},
     "meta": {...}, "pairs": [[u..., y...], ...]}

Floats are written with their shortest round-trip repr, so reading a file
reproduces the arrays bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..envs import action_to_target
from .interaction import ACTION_DIM, STATE_DIM, state_layout

FORMAT_VERSION = 1
KIND = "expert_pairs"


class ExpertFileError(ValueError):
    pass


def layout_descriptor():
    return {"state": {k: [s.start, s.stop] for k, s in state_layout().items()},
            "state_dim": STATE_DIM, "action_dim": ACTION_DIM}


def save_expert_pairs(path, pairs, meta=None):
    pairs = np.asarray(pairs, float).reshape(-1, STATE_DIM + ACTION_DIM)
    if not np.isfinite(pairs).all():
        raise ExpertFileError("expert pairs must be finite")
    doc = {"format_version": FORMAT_VERSION, "kind": KIND, "layout": layout_descriptor(),
           "meta": meta or {}, "pairs": pairs.tolist()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc))
    return path


def load_expert_pairs(path):
    """Return (pairs (N, d_u + d_y), meta)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"expert-pair file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ExpertFileError(f"{path}: not valid JSON ({exc})") from exc
    if doc.get("kind") != KIND or doc.get("format_version") != FORMAT_VERSION:
        raise ExpertFileError(f"{path}: not a version-{FORMAT_VERSION} expert-pair file")
    lay = doc.get("layout", {})
    width = lay.get("state_dim", -1) + lay.get("action_dim", -1)
    if lay != layout_descriptor():
        raise ExpertFileError(f"{path}: layout does not match this build")
    pairs = np.asarray(doc["pairs"], float).reshape(-1, width)
    return pairs, doc.get("meta", {})


def collect_expert_pairs(policy, env, n_episodes, rng=None, min_contacts=1, path=None):
    """Roll out deterministic mean actions and keep pairs whose state has rod contact.

    ``policy`` is a :class:`GaussianPolicy` or a checkpoint path.  Each world
    runs its share of ``n_episodes``; a pair is kept when at least
    ``min_contacts`` hand links touch the rod.
    """
    if isinstance(policy, (str, Path)):
        from ..trainer.policy import load_policy
        policy = load_policy(policy)
    if n_episodes < 0:
        raise ValueError("episode count must be non-negative")
    rng = rng if rng is not None else np.random.default_rng(0)
    rows = []
    E = env.n_envs
    if n_episodes > 0:
        quota = np.full(E, n_episodes // E)
        quota[: n_episodes % E] += 1
        count = np.zeros(E, np.int64)
        obs = env.reset(rng)
        h = env.hand
        while (count < quota).any():
            a = policy.mean_action(obs)
            active = count < quota
            flags, _ = env.sim.contact_features(env.state, h.lidx)
            keep = active & (flags.sum(1) >= min_contacts)
            if keep.any():
                u = h.state(env.state)
                y = h.normalized_action(action_to_target(a, env.q_lo, env.q_hi))
                rows.append(np.concatenate([u, y], axis=1)[keep])
            obs, _, done, _ = env.step(a)
            count += done
    pairs = np.concatenate(rows) if rows else np.zeros((0, STATE_DIM + ACTION_DIM))
    if path is not None:
        save_expert_pairs(path, pairs, {"episodes": int(n_episodes), "min_contacts": int(min_contacts)})
    return pairs
