"""Diagonal-Gaussian policy, value network and running observation normalizer."""
from __future__ import annotations

import numpy as np

from ..net import Adam, Mlp

LOG_2PI = np.log(2.0 * np.pi)


class RunningNorm:
    """Running mean / variance (parallel Welford merge) with clipping."""

    def __init__(self, dim, clip=10.0, eps=1e-8):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = eps
        self.clip = clip

    def update(self, x):
        x = np.asarray(x, float).reshape(-1, len(self.mean))
        n = len(x)
        if n == 0:
            return
        m, v = x.mean(0), x.var(0)
        tot = self.count + n
        delta = m - self.mean
        self.mean = self.mean + delta * n / tot
        self.var = (self.var * self.count + v * n + delta * delta * self.count * n / tot) / tot
        self.count = tot

    def __call__(self, x):
        return np.clip((x - self.mean) / np.sqrt(self.var + 1e-8), -self.clip, self.clip)

    def to_arrays(self, prefix=""):
        return {f"{prefix}mean": self.mean, f"{prefix}var": self.var, f"{prefix}count": np.array(self.count)}

    def load_arrays(self, arrays, prefix=""):
        self.mean = np.asarray(arrays[f"{prefix}mean"], float).copy()
        self.var = np.asarray(arrays[f"{prefix}var"], float).copy()
        self.count = float(arrays[f"{prefix}count"])


def gaussian_log_prob(mean, log_std, action):
    z = (action - mean) * np.exp(-log_std)
    return (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(-1)


class GaussianPolicy:
    """Mean network with a free log-std vector, plus a separate value network."""

    def __init__(self, obs_dim, act_dim, hidden=(256, 256), log_std_init=-1.0, rng=None, lr=5e-5,
                 max_grad_norm=1.0):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.obs_dim, self.act_dim = int(obs_dim), int(act_dim)
        self.mu = Mlp([obs_dim, *hidden, act_dim], "tanh", rng=rng, out_scale=0.01)
        self.log_std = np.full(act_dim, float(log_std_init))
        self.value = Mlp([obs_dim, *hidden, 1], "tanh", rng=rng, out_scale=1.0)
        self.norm = RunningNorm(obs_dim)
        self.pi_opt = Adam(self.pi_params(), lr=lr, max_grad_norm=max_grad_norm)
        self.v_opt = Adam(self.value.params(), lr=lr, max_grad_norm=max_grad_norm)

    def pi_params(self):
        return self.mu.params() + [self.log_std]

    def set_lr(self, lr):
        self.pi_opt.lr = self.v_opt.lr = float(lr)

    # -- acting -------------------------------------------------------
    def act(self, obs, rng=None, deterministic=False):
        """(action, log-prob, value) for raw observations (E, obs_dim)."""
        x = self.norm(np.atleast_2d(obs))
        mean = self.mu.forward(x)
        if deterministic or rng is None:
            a = mean
        else:
            a = mean + np.exp(self.log_std) * rng.standard_normal(mean.shape)
        return a, gaussian_log_prob(mean, self.log_std, a), self.value.forward(x)[:, 0]

    def mean_action(self, obs):
        return self.mu.forward(self.norm(np.atleast_2d(obs)))

    def values(self, obs):
        return self.value.forward(self.norm(np.atleast_2d(obs)))[:, 0]

    def entropy(self):
        return float((self.log_std + 0.5 * (1.0 + LOG_2PI)).sum())

    # -- persistence ---------------------------------------------------
    def checkpoint_items(self):
        nets = {"policy_mu": self.mu, "value": self.value}
        opts = {"policy": self.pi_opt, "value": self.v_opt}
        extra = {"log_std": self.log_std, **self.norm.to_arrays("obs_")}
        return nets, opts, extra

    def restore(self, nets, opt_arrays, extra):
        self.mu = nets["policy_mu"]
        self.value = nets["value"]
        self.log_std = np.asarray(extra["log_std"], float).copy()
        self.norm.load_arrays(extra, "obs_")
        self.pi_opt = Adam(self.pi_params())
        self.pi_opt.load_arrays(opt_arrays["policy"])
        self.v_opt = Adam(self.value.params())
        self.v_opt.load_arrays(opt_arrays["value"])


def load_policy(path):
    """Rebuild a :class:`GaussianPolicy` from a trainer checkpoint."""
    from ..net import load_checkpoint
    nets, opts, meta, extra = load_checkpoint(path)
    if "policy_mu" not in nets:
        raise ValueError(f"{path}: checkpoint holds no policy")
    mu = nets["policy_mu"]
    pol = GaussianPolicy(mu.in_dim, mu.out_dim, tuple(mu.sizes[1:-1]), rng=np.random.default_rng(0))
    pol.restore(nets, opts, extra)
    return pol
