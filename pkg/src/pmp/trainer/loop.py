"""Rollout collection, reward assembly, discriminator updates and the training loop."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..motion import PartBuffers, demo_blend
from ..net import load_checkpoint, save_checkpoint
from ..prior import DiscriminatorSet, RewardWeights, compose_rewards, interaction_reward
from .gae import compute_gae
from .policy import GaussianPolicy
from .ppo import PpoConfig, ppo_update


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class RolloutBatch:
    obs: np.ndarray  # (T, E, obs_dim)
    actions: np.ndarray  # (T, E, act_dim)
    logp: np.ndarray  # (T, E)
    values: np.ndarray  # (T + 1, E)
    r_task: np.ndarray  # (T, E)
    r_style: np.ndarray  # (T, E)
    reward: np.ndarray  # (T, E) total reward used by PPO
    done: np.ndarray  # (T, E)
    timeout: np.ndarray  # (T, E)
    r_part: np.ndarray  # (T, E, K)
    r_inter: np.ndarray  # (T, E, H)
    sigma: np.ndarray  # (T, E, H)
    pairs: list = field(default_factory=list)  # per discriminator (T*E, width)
    episode_nr: list = field(default_factory=list)
    components: dict = field(default_factory=dict)
    r_monitor: np.ndarray | None = None  # (T, E, K_monitor)
    monitor_pairs: list = field(default_factory=list)
    episode_stats: list = field(default_factory=list)  # per finished episode: length and component means

    @property
    def n_transitions(self):
        return self.r_task.size


def auto_blend_probability(K):
    """Demo-blend probability used when the config asks for the automatic choice."""
    return 0.1 if K > 2 else 0.0


def demo_input_stats(rows, floor=0.1):
    """Fixed discriminator input normalization from demo rows."""
    rows = np.asarray(rows, float)
    return rows.mean(0), np.sqrt(rows.var(0) + floor * floor)


class Trainer:
    """PPO + part-wise adversarial priors on one vectorized environment."""

    def __init__(self, env, cfg: PpoConfig | None = None, weights: RewardWeights | None = None,
                 seed=0, demo=None, blend_prob="auto", use_prior=True, max_incidents=10_000):
        self.env = env
        self.cfg = cfg or PpoConfig(n_envs=env.n_envs)
        self.weights = weights or RewardWeights()
        self.seed = int(seed)
        ss = np.random.SeedSequence(self.seed)
        init_ss, env_ss, act_ss, upd_ss = ss.spawn(4)
        init_rng = np.random.default_rng(init_ss)
        self.env_rng = np.random.default_rng(env_ss)
        self.act_rng = np.random.default_rng(act_ss)
        self.upd_rng = np.random.default_rng(upd_ss)
        c = self.cfg
        self.policy = GaussianPolicy(env.obs_dim, env.act_dim, c.hidden, c.log_std_init, init_rng, c.lr,
                                     c.max_grad_norm)
        self.widths = [2 * d for d in env.part_dims] + list(env.hand_dims)
        self.K = len(env.part_dims)
        self.dset = None
        self.demo = None
        self.replay = None
        if use_prior and self.widths:
            demo = demo if demo is not None else env.demo_pairs()
            if len(demo) != len(self.widths) or any(len(d) == 0 for d in demo):
                raise ValueError("every discriminator needs a non-empty demo set")
            stats = [demo_input_stats(d) for d in demo]
            names = [f"part{k}" for k in range(self.K)] + [f"hand{n}" for n in range(len(env.hand_dims))]
            self.dset = DiscriminatorSet([2 * d for d in env.part_dims], env.hand_dims, c.disc_hidden, "relu",
                                         init_rng, c.disc_lr, self.weights, names[:self.K], names[self.K:],
                                         stats)
            self.demo = PartBuffers(self.widths, c.demo_buffer)
            self.demo.add(demo)
            self.replay = PartBuffers(self.widths, c.replay_buffer)
        self.blend_prob = auto_blend_probability(self.K) if blend_prob == "auto" else float(blend_prob)
        # evaluation-only discriminators on a second part split; trained like the real
        # ones but never rewarded, so different priors can be compared part by part
        self.monitor = None
        mobs = getattr(env, "monitor_observer", None)
        if use_prior and mobs is not None:
            mdemo = env.monitor_demo_pairs()
            mwidths = [2 * d for d in mobs.dims]
            self.monitor = DiscriminatorSet(mwidths, (), c.disc_hidden, "relu", init_rng, c.disc_lr, self.weights,
                                            [f"monitor_{n}" for n in mobs.spec.names], (),
                                            [demo_input_stats(d) for d in mdemo])
            self.monitor_demo = PartBuffers(mwidths, c.demo_buffer)
            self.monitor_demo.add(mdemo)
            self.monitor_replay = PartBuffers(mwidths, c.replay_buffer)
            self.monitor_blend = auto_blend_probability(len(mwidths)) if blend_prob == "auto" else float(blend_prob)
        self.max_incidents = max_incidents
        self.obs = env.reset(self.env_rng)
        self.ep_return = np.zeros(env.n_envs)
        self.ep_len = np.zeros(env.n_envs, np.int64)
        self.ep_comp = {}
        self.updates = 0
        self.env_steps = 0
        self.episodes_logged = 0
        self.history = []

    # -- rollout ------------------------------------------------------
    def style_terms(self, info):
        """Per-step (r_part (E,K), r_inter (E,H), sigma (E,H)) from discriminator snapshots."""
        E = self.env.n_envs
        H = len(self.env.hand_dims)
        if self.dset is None:
            return np.zeros((E, self.K)), np.zeros((E, H)), np.zeros((E, H))
        r_part = np.stack([self.dset.reward(k, info["part_pairs"][k]) for k in range(self.K)], axis=1)
        r_inter = np.zeros((E, H))
        for n in range(H):
            r_inter[:, n] = interaction_reward(self.dset.prob(self.K + n, info["hand_pairs"][n]), self.weights.beta)
        return r_part, r_inter, np.asarray(info["sigma"], float).reshape(E, H)

    def run_rollout(self, horizon=None, deterministic=False):
        env, pol = self.env, self.policy
        T = horizon or self.cfg.horizon
        E = env.n_envs
        H = len(env.hand_dims)
        obs = np.zeros((T, E, env.obs_dim))
        acts = np.zeros((T, E, env.act_dim))
        logp = np.zeros((T, E))
        values = np.zeros((T + 1, E))
        r_task, r_style, reward = np.zeros((T, E)), np.zeros((T, E)), np.zeros((T, E))
        done, timeout = np.zeros((T, E)), np.zeros((T, E))
        r_part, r_inter, sigma = np.zeros((T, E, self.K)), np.zeros((T, E, H)), np.zeros((T, E, H))
        pairs = [[] for _ in self.widths]
        mK = len(self.monitor) if self.monitor is not None else 0
        r_mon = np.zeros((T, E, mK))
        mpairs = [[] for _ in range(mK)]
        comps = {}
        episode_nr, episode_stats = [], []
        for t in range(T):
            a, lp, v = pol.act(self.obs, None if deterministic else self.act_rng, deterministic)
            obs[t], acts[t], logp[t], values[t] = self.obs, a, lp, v
            nxt, rg, d, info = env.step(a)
            rp, ri, sg = self.style_terms(info)
            r_task[t] = rg
            if self.dset is not None:
                br = compose_rewards(rp, env.hand_part_ids, ri, sg, rg, self.weights, env.blend_mode)
                r_style[t], reward[t] = br.style, br.total
            else:
                # without a prior the task reward is the whole objective
                reward[t] = rg
            r_part[t], r_inter[t], sigma[t] = rp, ri, sg
            done[t], timeout[t] = d, info["timeout"]
            for key, val in info["components"].items():
                comps.setdefault(key, []).append(np.asarray(val, float))
            if self.replay is not None:
                rows = list(info["part_pairs"] or []) + list(info["hand_pairs"])
                for k, r in enumerate(rows):
                    pairs[k].append(r)
            for k in range(mK):
                r_mon[t, :, k] = self.monitor.reward(k, info["monitor_pairs"][k])
                mpairs[k].append(info["monitor_pairs"][k])
            self.ep_return += rg
            self.ep_len += 1
            for key, val in info["components"].items():
                acc = self.ep_comp.setdefault(key, np.zeros(E))
                acc += np.broadcast_to(np.asarray(val, float), (E,))
            for e in np.flatnonzero(d):
                episode_nr.append(self.ep_return[e] / env.max_steps)
                row = {"length": int(self.ep_len[e])}
                for key, acc in self.ep_comp.items():
                    row[key] = acc[e] / self.ep_len[e]
                    acc[e] = 0.0
                episode_stats.append(row)
                self.ep_return[e] = 0.0
                self.ep_len[e] = 0
            self.obs = nxt
        values[T] = pol.values(self.obs)
        self.env_steps += T * E
        if getattr(env, "incidents", 0) > self.max_incidents:
            raise TrainingDiverged(f"{env.incidents} simulation divergences exceed the budget {self.max_incidents}")
        return RolloutBatch(obs, acts, logp, values, r_task, r_style, reward, done, timeout, r_part, r_inter,
                            sigma, [np.concatenate(p) for p in pairs if p], episode_nr,
                            {k: np.stack(v) for k, v in comps.items()}, r_mon,
                            [np.concatenate(p) for p in mpairs], episode_stats)

    # -- discriminators -----------------------------------------------
    def update_discriminators(self, batch_size=None):
        if self.dset is None:
            return []
        stats = self._disc_rounds(self.dset, self.demo, self.replay, self.K, self.blend_prob, batch_size)
        if self.monitor is not None:
            stats += self._disc_rounds(self.monitor, self.monitor_demo, self.monitor_replay, len(self.monitor),
                                       self.monitor_blend, batch_size)
        return stats

    def _disc_rounds(self, dset, demo, replay, K, blend, batch_size):
        n = batch_size or self.cfg.pmp_batch
        if min(replay.sizes()) == 0 or min(demo.sizes()) == 0:
            raise ValueError("discriminator update needs non-empty demo and replay buffers")
        rng = self.upd_rng
        stats = []
        for _ in range(self.cfg.disc_rounds):
            demo_b = [demo[i].sample(n, rng) for i in range(len(dset))]
            agent_b = [replay[i].sample(n, rng) for i in range(len(dset))]
            # blending targets the multiplicative style factors only
            agent_b[:K] = demo_blend(agent_b[:K], demo, blend, rng)
            stats = dset.update(demo_b, agent_b)
        return stats

    # -- one update ---------------------------------------------------
    def update(self):
        batch = self.run_rollout()
        if self.replay is not None:
            self.replay.add(batch.pairs)
        if self.monitor is not None:
            self.monitor_replay.add(batch.monitor_pairs)
        c = self.cfg
        adv, ret = compute_gae(batch.reward, batch.values, batch.done, c.gamma, c.lam)
        T, E = batch.reward.shape
        flat = lambda x: x.reshape(T * E, *x.shape[2:])  # noqa: E731
        ppo = ppo_update(self.policy, flat(batch.obs), flat(batch.actions), flat(batch.logp), adv.reshape(-1),
                         ret.reshape(-1), c, self.upd_rng)
        self.policy.norm.update(flat(batch.obs))
        dstats = self.update_discriminators()
        self.updates += 1
        row = self.metrics_row(batch, ppo, dstats)
        self.history.append(row)
        return row, batch

    def metrics_columns(self):
        cols = ["update", "env_steps", "task_reward_mean", "style_reward_mean", "total_reward_mean", "kl",
                "epochs_run", "policy_loss", "value_loss", "episodes", "episode_nr_mean", "incidents", "nr"]
        names = self.dset.names if self.dset is not None else []
        cols += [f"style_reward_{n}" for n in names[:self.K]]
        cols += [f"sigma_{n}" for n in names[self.K:]] + [f"interaction_reward_{n}" for n in names[self.K:]]
        for n in names:
            cols += [f"loss_disc_{n}", f"loss_gp_{n}"]
        if self.monitor is not None:
            cols += [f"{n}_reward" for n in self.monitor.names]
            for n in self.monitor.names:
                cols += [f"loss_disc_{n}", f"loss_gp_{n}"]
        return cols

    def metrics_row(self, batch, ppo, dstats):
        row = {"update": self.updates, "env_steps": self.env_steps,
               "task_reward_mean": float(batch.r_task.mean()), "style_reward_mean": float(batch.r_style.mean()),
               "total_reward_mean": float(batch.reward.mean()), "kl": ppo["kl"], "epochs_run": ppo["epochs_run"],
               "policy_loss": ppo["policy_loss"], "value_loss": ppo["value_loss"],
               "episodes": len(batch.episode_nr),
               "episode_nr_mean": float(np.mean(batch.episode_nr)) if batch.episode_nr else "",
               "incidents": getattr(self.env, "incidents", 0), "nr": ""}
        if self.dset is not None:
            names = self.dset.names
            for k in range(self.K):
                row[f"style_reward_{names[k]}"] = float(batch.r_part[..., k].mean())
            for n in range(len(names) - self.K):
                row[f"sigma_{names[self.K + n]}"] = float(batch.sigma[..., n].mean())
                row[f"interaction_reward_{names[self.K + n]}"] = float(batch.r_inter[..., n].mean())
            for s in dstats:
                row[f"loss_disc_{s['name']}"] = s["loss_disc"]
                row[f"loss_gp_{s['name']}"] = s["loss_gp"]
        if self.monitor is not None:
            for k, n in enumerate(self.monitor.names):
                row[f"{n}_reward"] = float(batch.r_monitor[..., k].mean())
        return row

    def train(self, n_updates, metrics_path=None, checkpoint_dir=None, checkpoint_every=0, eval_every=0,
              eval_env=None, eval_episodes=10, callback=None, episodes_path=None):
        """Run ``n_updates`` updates, appending to the metrics / episode CSVs when given."""
        writer = ep_writer = None
        fh = ep_fh = None
        if metrics_path is not None:
            fh, writer = _open_csv(metrics_path, self.metrics_columns())
        try:
            for _ in range(n_updates):
                row, batch = self.update()
                if eval_every and self.updates % eval_every == 0 and eval_env is not None:
                    nrs = evaluate_nr(self.policy, eval_env, eval_episodes, np.random.default_rng(self.seed + 7))
                    row["nr"] = float(np.mean(nrs))
                if writer is not None:
                    writer.writerow({k: _fmt(v) for k, v in row.items()})
                    fh.flush()
                if episodes_path is not None and batch.episode_nr:
                    if ep_writer is None:
                        cols = EPISODE_COLUMNS + [f"mean_{k}" for k in batch.episode_stats[0] if k != "length"]
                        ep_fh, ep_writer = _open_csv(episodes_path, cols)
                    for nr, st in zip(batch.episode_nr, batch.episode_stats):
                        self.episodes_logged += 1
                        rec = {"update": self.updates, "episode": self.episodes_logged, "nr": _fmt(nr),
                               "length": st["length"]}
                        rec.update({f"mean_{k}": _fmt(v) for k, v in st.items() if k != "length"})
                        ep_writer.writerow(rec)
                    ep_fh.flush()
                if checkpoint_dir and checkpoint_every and self.updates % checkpoint_every == 0:
                    self.save(Path(checkpoint_dir) / f"ckpt_{self.updates:06d}.npz")
                if callback is not None:
                    callback(self, row, batch)
        finally:
            for h in (fh, ep_fh):
                if h is not None:
                    h.close()
        return self.history

    # -- checkpoints ----------------------------------------------------
    def save(self, path):
        nets, opts, extra = self.policy.checkpoint_items()
        if self.dset is not None:
            dn, do = self.dset.checkpoint_items()
            nets.update(dn)
            opts.update(do)
        if self.monitor is not None:
            dn, do = self.monitor.checkpoint_items("monitor")
            nets.update(dn)
            opts.update(do)
        meta = {"updates": self.updates, "env_steps": self.env_steps, "seed": self.seed, "K": self.K,
                "episodes_logged": self.episodes_logged}
        save_checkpoint(path, nets, opts, meta, extra)

    def load(self, path):
        nets, opts, meta, extra = load_checkpoint(path)
        self.policy.restore(nets, opts, extra)
        if self.dset is not None:
            self.dset.restore(nets, opts)
        if self.monitor is not None:
            self.monitor.restore(nets, opts, "monitor")
        self.updates = int(meta.get("updates", 0))
        self.env_steps = int(meta.get("env_steps", 0))
        self.episodes_logged = int(meta.get("episodes_logged", 0))
        return meta


EPISODE_COLUMNS = ["update", "episode", "nr", "length"]


def _open_csv(path, columns):
    """Append-mode CSV writer; an existing file must carry the same header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists() or path.stat().st_size == 0
    if not new:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), [])
        if header != list(columns):
            raise ValueError(f"{path}: existing columns {header} differ from {list(columns)}")
    fh = open(path, "a", newline="")
    writer = csv.DictWriter(fh, fieldnames=columns)
    if new:
        writer.writeheader()
    return fh, writer


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def evaluate_nr(policy, env, episodes, rng, deterministic=True):
    """Per-episode normalized returns: sum of task rewards over the configured max length.

    Every world runs the same number of episodes and results are taken in
    (round, world) order, so short episodes are not over-represented.
    """
    if episodes < 1:
        raise ValueError("need at least one evaluation episode")
    E = env.n_envs
    quota = -(-episodes // E)
    obs = env.reset(rng)
    ret = np.zeros(E)
    count = np.zeros(E, np.int64)
    results = {}
    while (count < quota).any():
        if deterministic:
            a = policy.mean_action(obs)
        else:
            a, _, _ = policy.act(obs, rng)
        obs, rg, d, _ = env.step(a)
        ret += rg
        for e in np.flatnonzero(d):
            if count[e] < quota:
                results[(count[e], e)] = ret[e] / env.max_steps
            count[e] += 1
            ret[e] = 0.0
    keys = sorted(results)[:episodes]
    return np.array([results[k] for k in keys])


def format_nr(values):
    """Table-style 'mean (std)': mean to two decimals, std to two significant figures."""
    v = np.asarray(values, float)
    if v.size == 0:
        raise ValueError("no episodes")
    mean, std = float(v.mean()), float(v.std())
    return f"{mean:.2f} ({std:#.2g})" if std > 0 else f"{mean:.2f} (0.0)"
