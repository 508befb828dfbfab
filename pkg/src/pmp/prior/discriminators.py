"""Per-part and interaction discriminators with their adversarial losses.

Each discriminator is an :class:`~pmp.net.Mlp` with a scalar logit head.
The label-prediction loss is the cross-entropy form (demo labelled 1, agent
labelled 0) evaluated on clamped probabilities, so its gradient vanishes
where the clamp is active.
"""
from __future__ import annotations

import numpy as np

from ..net import Adam, Mlp
from .rewards import EPS, RewardWeights, prob_from_logit, sigmoid, style_reward_part


def _check_batch(net, x, what):
    x = np.atleast_2d(np.asarray(x, float))
    if len(x) == 0:
        raise ValueError(f"empty {what} batch")
    if x.shape[1] != net.in_dim:
        raise ValueError(f"{what} batch width {x.shape[1]} != discriminator input {net.in_dim}")
    return x


def disc_prob(net, x):
    """Clamped sigmoid of the discriminator logit."""
    x = np.asarray(x, float)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"pair width {x.shape[-1]} != discriminator input {net.in_dim}")
    return prob_from_logit(net.forward(x)[..., 0])


def discriminator_loss(net, demo, agent, with_grads=False):
    """mean(-log D(demo)) + mean(-log(1 - D(agent)))."""
    demo = _check_batch(net, demo, "demo")
    agent = _check_batch(net, agent, "agent")
    grads = None
    value = 0.0
    for x, label in ((demo, 1.0), (agent, 0.0)):
        f, cache = net.forward_cache(x)
        s = sigmoid(f)
        p = np.clip(s, EPS, 1.0 - EPS)
        inside = (s > EPS) & (s < 1.0 - EPS)
        if label == 1.0:
            value += float(-np.log(p).mean())
            df = -(1.0 - s) * inside
        else:
            value += float(-np.log1p(-p).mean())
            df = s * inside
        if with_grads:
            g, _ = net.backward(cache, df / len(x))
            grads = g if grads is None else [a + b for a, b in zip(grads, g)]
    if not np.isfinite(value):
        raise FloatingPointError("non-finite discriminator loss")
    return (value, grads) if with_grads else value


def gradient_penalty(net, demo, with_grads=False):
    """Mean squared input-gradient norm of the probability at demo samples."""
    demo = _check_batch(net, demo, "demo")
    value, grads, _ = net.grad_penalty(demo, with_grads=with_grads)
    return (value, grads) if with_grads else value


def weight_decay_loss(net, with_grads=False):
    value = net.weight_sq_norm()
    if not with_grads:
        return value
    grads = []
    for W, b in zip(net.weights, net.biases):
        grads += [2.0 * W, np.zeros_like(b)]
    return value, grads


def demo_accuracy(net, demo, agent=None):
    """Fraction of demo (and optionally agent) samples classified correctly."""
    acc = float((disc_prob(net, demo) > 0.5).mean())
    if agent is None:
        return acc
    return acc, float((disc_prob(net, agent) < 0.5).mean())


class DiscriminatorSet:
    """K style discriminators followed by one interaction discriminator per hand."""

    def __init__(self, part_dims, hand_dims=(), hidden=(128, 128), activation="relu", rng=None,
                 lr=5e-5, weights=None, part_names=None, hand_names=None, in_stats=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights = weights or RewardWeights()
        self.part_dims = [int(d) for d in part_dims]
        self.hand_dims = [int(d) for d in hand_dims]
        self.names = list(part_names or [f"part{k}" for k in range(len(self.part_dims))])
        self.names += list(hand_names or [f"hand{n}" for n in range(len(self.hand_dims))])
        if len(self.names) != len(self.part_dims) + len(self.hand_dims):
            raise ValueError("one name per discriminator")
        self.nets, self.opts = [], []
        for i, d in enumerate(self.part_dims + self.hand_dims):
            mean, std = (None, None) if in_stats is None or in_stats[i] is None else in_stats[i]
            net = Mlp([d, *hidden, 1], activation, "identity", rng=rng, in_mean=mean, in_std=std)
            self.nets.append(net)
            self.opts.append(Adam(net.params(), lr=lr))

    @property
    def K(self):
        return len(self.part_dims)

    @property
    def n_hands(self):
        return len(self.hand_dims)

    def __len__(self):
        return len(self.nets)

    def prob(self, i, x):
        return disc_prob(self.nets[i], x)

    def reward(self, i, x):
        return style_reward_part(self.prob(i, x))

    def loss_pieces(self, i, demo, agent):
        net = self.nets[i]
        return (discriminator_loss(net, demo, agent), gradient_penalty(net, demo), weight_decay_loss(net))

    def update(self, demo_batches, agent_batches, n_steps=1):
        """Optimizer steps on the averaged total loss; returns per-discriminator stats.

        The loss of discriminator ``i`` enters the set-wide objective with
        weight ``1 / N`` where ``N`` is the number of style discriminators
        (for style nets) or hands (for interaction nets).
        """
        if len(demo_batches) != len(self) or len(agent_batches) != len(self):
            raise ValueError(f"expected {len(self)} demo and agent batches")
        w = self.weights
        stats = []
        for i, net in enumerate(self.nets):
            group = self.K if i < self.K else self.n_hands
            for _ in range(n_steps):
                ld, gd = discriminator_loss(net, demo_batches[i], agent_batches[i], with_grads=True)
                lg, gg = gradient_penalty(net, demo_batches[i], with_grads=True)
                lr_, gr = weight_decay_loss(net, with_grads=True)
                grads = [(w.w_disc * a + w.w_gp * b + w.w_reg * c) / group for a, b, c in zip(gd, gg, gr)]
                self.opts[i].step(net.params(), grads)
            stats.append({"name": self.names[i], "loss_disc": ld, "loss_gp": lg, "loss_reg": lr_,
                          "loss_total": (w.w_disc * ld + w.w_gp * lg + w.w_reg * lr_) / group})
        return stats

    # -- persistence ---------------------------------------------------
    def checkpoint_items(self, prefix="disc"):
        nets = {f"{prefix}{i}": n for i, n in enumerate(self.nets)}
        opts = {f"{prefix}{i}": o for i, o in enumerate(self.opts)}
        return nets, opts

    def restore(self, nets, opt_arrays, prefix="disc"):
        for i in range(len(self)):
            self.nets[i] = nets[f"{prefix}{i}"]
            self.opts[i] = Adam(self.nets[i].params())
            self.opts[i].load_arrays(opt_arrays[f"{prefix}{i}"])

