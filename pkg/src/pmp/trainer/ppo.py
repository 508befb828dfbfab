"""Clipped-surrogate PPO update with KL early stop."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy import gaussian_log_prob


@dataclass
class PpoConfig:
    lr: float = 5e-5
    gamma: float = 0.99
    lam: float = 0.95
    clip: float = 0.2
    kl_threshold: float = 0.008
    n_envs: int = 64
    horizon: int = 16
    epochs: int = 5
    minibatch: int = 256
    pmp_batch: int = 256
    demo_buffer: int = 200_000
    replay_buffer: int = 1_000_000
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    max_grad_norm: float = 1.0
    hidden: tuple = (256, 256)
    disc_hidden: tuple = (128, 128)
    disc_lr: float = 5e-5
    disc_rounds: int = 1
    log_std_init: float = -1.0

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        self.disc_hidden = tuple(self.disc_hidden)
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.clip <= 0 or self.lr < 0 or self.kl_threshold <= 0:
            raise ValueError("clip and KL threshold must be positive, lr non-negative")
        for name in ("n_envs", "horizon", "epochs", "minibatch", "pmp_batch", "demo_buffer",
                     "replay_buffer", "disc_rounds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def batch_size(self):
        return self.n_envs * self.horizon


def ppo_objective(ratio, adv, clip):
    """Per-sample clipped surrogate min(r A, clip(r, 1-c, 1+c) A)."""
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv)


def normalize_advantages(adv):
    adv = np.asarray(adv, float)
    std = adv.std()
    return (adv - adv.mean()) / (std if std > 0 else 1.0)


def approx_kl(logp_old, logp_new):
    """Low-variance estimator E[(r - 1) - log r] of KL(old || new)."""
    log_r = logp_new - logp_old
    return float(np.mean(np.expm1(log_r) - log_r))


def surrogate_grads(policy, x, actions, logp_old, adv, clip, entropy_coef=0.0):
    """Per-sample objective, ratios and gradients of the minibatch loss w.r.t. ``pi_params()``.

    loss = -mean(min(r A, clip(r) A)) - entropy_coef * entropy, on normalized inputs ``x``.
    """
    m = len(x)
    mean, cache = policy.mu.forward_cache(x)
    std_inv = np.exp(-policy.log_std)
    z = (actions - mean) * std_inv
    logp = (-0.5 * z * z - policy.log_std - 0.5 * np.log(2 * np.pi)).sum(-1)
    ratio = np.exp(logp - logp_old)
    obj = ppo_objective(ratio, adv, clip)
    if not np.isfinite(obj).all():
        raise FloatingPointError("non-finite policy loss")
    # gradient flows only where the unclipped branch attains the minimum
    active = (ratio * adv) <= (np.clip(ratio, 1 - clip, 1 + clip) * adv)
    dlogp = -(adv * ratio * active) / m
    dmean = dlogp[:, None] * z * std_inv
    dlogstd = (dlogp[:, None] * (z * z - 1.0)).sum(0) - entropy_coef
    g_mu, _ = policy.mu.backward(cache, dmean)
    return obj, ratio, g_mu + [dlogstd]


def surrogate_loss(policy, x, actions, logp_old, adv, clip, entropy_coef=0.0):
    mean = policy.mu.forward(x)
    ratio = np.exp(gaussian_log_prob(mean, policy.log_std, actions) - logp_old)
    return float(-ppo_objective(ratio, adv, clip).mean() - entropy_coef * policy.entropy())


def ppo_update(policy, obs, actions, logp_old, advantages, returns, cfg: PpoConfig, rng):
    """Run the epoch / minibatch loop; returns a stats dict."""
    n = len(obs)
    adv = normalize_advantages(advantages)
    x_all = policy.norm(obs)
    stats = {"kl": 0.0, "epochs_run": 0, "clip_frac": 0.0, "policy_loss": 0.0, "value_loss": 0.0}
    for epoch in range(cfg.epochs):
        # KL of the current policy against the rollout policy over the whole batch
        mean = policy.mu.forward(x_all)
        kl = approx_kl(logp_old, gaussian_log_prob(mean, policy.log_std, actions))
        stats["kl"] = kl
        if kl > cfg.kl_threshold:
            break
        perm = rng.permutation(n)
        pl, vl, cf, nb = 0.0, 0.0, 0.0, 0
        for start in range(0, n, cfg.minibatch):
            idx = perm[start:start + cfg.minibatch]
            x, a, A = x_all[idx], actions[idx], adv[idx]
            m = len(idx)
            obj, ratio, grads = surrogate_grads(policy, x, a, logp_old[idx], A, cfg.clip, cfg.entropy_coef)
            policy.pi_opt.step(policy.pi_params(), grads)

            v, vcache = policy.value.forward_cache(x)
            err = v[:, 0] - returns[idx]
            vloss = 0.5 * float((err * err).mean())
            if not np.isfinite(vloss):
                raise FloatingPointError("non-finite value loss")
            g_v, _ = policy.value.backward(vcache, (cfg.value_coef * err / m)[:, None])
            policy.v_opt.step(policy.value.params(), g_v)
            pl += float(-obj.mean())
            vl += vloss
            cf += float((np.abs(ratio - 1.0) > cfg.clip).mean())
            nb += 1
        stats["epochs_run"] = epoch + 1
        stats.update(policy_loss=pl / nb, value_loss=vl / nb, clip_frac=cf / nb)
    return stats
