"""Fully connected networks with hand-written backward passes.

Rows are samples.  Layer ``l`` computes ``z_l = a_{l-1} @ W_l + b_l`` with
``W_l`` shaped ``(fan_in, fan_out)``; hidden layers apply tanh or relu, the
output layer identity or sigmoid.  An optional fixed input normalization
``(x - mean) / std`` lives inside the network so input gradients are taken
with respect to the raw features.
"""
from __future__ import annotations

import numpy as np

HIDDEN = ("tanh", "relu")
OUTPUT = ("identity", "sigmoid")


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _dact(name, z, a):
    """First derivative, given pre-activation z and activation a."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def _ddact(name, z, a):
    if name == "tanh":
        return -2.0 * a * (1.0 - a * a)
    if name == "sigmoid":
        return a * (1.0 - a) * (1.0 - 2.0 * a)
    return np.zeros_like(z)


class Mlp:
    def __init__(self, sizes, hidden="tanh", output="identity", rng=None, out_scale=1.0,
                 in_mean=None, in_std=None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer widths {sizes}")
        if hidden not in HIDDEN:
            raise ValueError(f"hidden activation must be one of {HIDDEN}")
        if output not in OUTPUT:
            raise ValueError(f"output activation must be one of {OUTPUT}")
        self.sizes = sizes
        self.hidden = hidden
        self.output = output
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights, self.biases = [], []
        for l, (fi, fo) in enumerate(zip(sizes[:-1], sizes[1:])):
            # Glorot-uniform init; the last layer can be shrunk (policy means, value heads)
            lim = np.sqrt(6.0 / (fi + fo))
            if l == len(sizes) - 2:
                lim *= out_scale
            self.weights.append(rng.uniform(-lim, lim, (fi, fo)))
            self.biases.append(np.zeros(fo))
        self.in_mean = np.zeros(sizes[0]) if in_mean is None else np.asarray(in_mean, float).copy()
        self.in_std = np.ones(sizes[0]) if in_std is None else np.asarray(in_std, float).copy()
        if self.in_mean.shape != (sizes[0],) or self.in_std.shape != (sizes[0],):
            raise ValueError("input normalization must match the input width")
        if (self.in_std <= 0).any():
            raise ValueError("input std must be positive")

    # -- parameters ----------------------------------------------------
    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def in_dim(self):
        return self.sizes[0]

    @property
    def out_dim(self):
        return self.sizes[-1]

    def params(self):
        """Parameter arrays in a fixed order: W_1, b_1, W_2, b_2, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def set_params(self, params):
        params = list(params)
        if len(params) != 2 * self.n_layers:
            raise ValueError("wrong number of parameter arrays")
        for l in range(self.n_layers):
            W, b = np.asarray(params[2 * l], float), np.asarray(params[2 * l + 1], float)
            if W.shape != self.weights[l].shape or b.shape != self.biases[l].shape:
                raise ValueError(f"layer {l}: shape mismatch")
            self.weights[l] = W.copy()
            self.biases[l] = b.copy()

    def copy(self):
        other = Mlp.__new__(Mlp)
        other.sizes = list(self.sizes)
        other.hidden, other.output = self.hidden, self.output
        other.weights = [W.copy() for W in self.weights]
        other.biases = [b.copy() for b in self.biases]
        other.in_mean, other.in_std = self.in_mean.copy(), self.in_std.copy()
        return other

    def weight_sq_norm(self):
        """Sum of squared weights (biases excluded)."""
        return float(sum((W * W).sum() for W in self.weights))

    def to_arrays(self, prefix=""):
        out = {f"{prefix}in_mean": self.in_mean, f"{prefix}in_std": self.in_std}
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}W{l}"] = W
            out[f"{prefix}b{l}"] = b
        return out

    def load_arrays(self, arrays, prefix=""):
        self.in_mean = np.asarray(arrays[f"{prefix}in_mean"], float).copy()
        self.in_std = np.asarray(arrays[f"{prefix}in_std"], float).copy()
        self.set_params([arrays[f"{prefix}{k}{l}"] for l in range(self.n_layers) for k in "Wb"])

    # -- evaluation ----------------------------------------------------
    def _check(self, x):
        x = np.asarray(x, float)
        single = x.ndim == 1
        X = x[None] if single else x
        if X.ndim != 2 or X.shape[1] != self.in_dim:
            raise ValueError(f"input width {X.shape[-1]} != {self.in_dim}")
        return X, single

    def _forward(self, X):
        a = (X - self.in_mean) / self.in_std
        zs, acts = [], [a]
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = _act(self.hidden if l < self.n_layers - 1 else self.output, z)
            zs.append(z)
            acts.append(a)
        return zs, acts

    def forward(self, x):
        X, single = self._check(x)
        y = self._forward(X)[1][-1]
        return y[0] if single else y

    __call__ = forward

    def forward_cache(self, x):
        X, _ = self._check(x)
        zs, acts = self._forward(X)
        return acts[-1], (X, zs, acts)

    def _act_name(self, l):
        return self.hidden if l < self.n_layers - 1 else self.output

    def backward(self, cache, dy):
        """Parameter gradients and input gradient for upstream gradient dy (B, out)."""
        X, zs, acts = cache
        dy = np.asarray(dy, float).reshape(acts[-1].shape)
        grads = [None] * (2 * self.n_layers)
        dz = dy * _dact(self._act_name(self.n_layers - 1), zs[-1], acts[-1])
        for l in range(self.n_layers - 1, -1, -1):
            grads[2 * l] = acts[l].T @ dz
            grads[2 * l + 1] = dz.sum(axis=0)
            da = dz @ self.weights[l].T
            if l > 0:
                dz = da * _dact(self.hidden, zs[l - 1], acts[l])
        return grads, da / self.in_std

    def input_gradient(self, x):
        """dy/dx for a scalar-output network; (B, in) or (in,)."""
        if self.out_dim != 1:
            raise ValueError("input gradient needs a scalar output")
        X, single = self._check(x)
        y, cache = self.forward_cache(X)
        _, gx = self.backward(cache, np.ones_like(y))
        return gx[0] if single else gx

    # -- gradient penalty ----------------------------------------------
    def grad_penalty(self, x, with_grads=True):
        """Mean squared input-gradient norm of sigmoid(logit) and its parameter gradients.

        The network output is treated as a logit; the penalty is taken on the
        probability ``s(f)``.  Parameter gradients come from an explicit
        reverse pass through the input-gradient computation.
        """
        if self.out_dim != 1 or self.output != "identity":
            raise ValueError("gradient penalty needs a scalar logit output")
        X, _ = self._check(x)
        B = X.shape[0]
        L = self.n_layers
        zs, acts = self._forward(X)
        f = zs[-1]
        s = _act("sigmoid", f)
        ds = s * (1.0 - s)

        # backward pass for df/dx, keeping the intermediates
        g = [None] * (L + 1)  # g[l]: df/dz_l, l = 1..L (index shifted by one below)
        u = [None] * L  # u[l]: df/da_l, l = 0..L-1
        g[L] = np.ones_like(f)
        for l in range(L, 0, -1):
            u[l - 1] = g[l] @ self.weights[l - 1].T
            if l - 1 >= 1:
                g[l - 1] = u[l - 1] * _dact(self.hidden, zs[l - 2], acts[l - 1])
        gx = u[0] / self.in_std
        sq = (gx * gx).sum(axis=1, keepdims=True)
        value = float((ds * ds * sq).mean())
        if not with_grads:
            return value, None, gx * ds

        grads = [np.zeros_like(p) for p in self.params()]
        zbar = [np.zeros_like(z) for z in zs]
        ubar = (2.0 / B) * ds * ds * gx / self.in_std
        for l in range(1, L + 1):
            W = self.weights[l - 1]
            gbar = ubar @ W
            grads[2 * (l - 1)] += ubar.T @ g[l]
            if l < L:
                d1 = _dact(self.hidden, zs[l - 1], acts[l])
                d2 = _ddact(self.hidden, zs[l - 1], acts[l])
                zbar[l - 1] += gbar * u[l] * d2
                ubar = gbar * d1
        # d(s'^2)/df = 2 s'^2 (1 - 2 s)
        zbar[L - 1] += (2.0 / B) * ds * ds * (1.0 - 2.0 * s) * sq
        dz = zbar[L - 1]
        for l in range(L - 1, -1, -1):
            grads[2 * l] += acts[l].T @ dz
            grads[2 * l + 1] += dz.sum(axis=0)
            if l > 0:
                dz = (dz @ self.weights[l].T) * _dact(self.hidden, zs[l - 1], acts[l]) + zbar[l - 1]
        return value, grads, gx * ds


# -- registered scalar losses ------------------------------------------
# each maps (y, target) -> (per-sample loss (B,), dloss/dy (B, out))

def _mse(y, t):
    d = y - t
    return 0.5 * (d * d).sum(axis=1), d


def _bce_logit(y, t):
    # numerically stable -[t log s(y) + (1-t) log(1-s(y))]
    loss = np.maximum(y, 0.0) - y * t + np.log1p(np.exp(-np.abs(y)))
    return loss.sum(axis=1), _act("sigmoid", y) - t


def _constant(y, t):
    return np.full(y.shape[0], 1.0), np.zeros_like(y)


LOSSES = {"mse": _mse, "bce_logit": _bce_logit, "constant": _constant}


def param_gradients(net, loss, x, target=None):
    """Mean batch loss and its gradients w.r.t. every parameter."""
    if loss not in LOSSES:
        raise ValueError(f"unknown loss {loss!r}; registered: {sorted(LOSSES)}")
    y, cache = net.forward_cache(x)
    t = np.zeros_like(y) if target is None else np.asarray(target, float).reshape(y.shape)
    per, dy = LOSSES[loss](y, t)
    value = float(per.mean())
    if not np.isfinite(value):
        raise FloatingPointError("non-finite loss")
    grads, _ = net.backward(cache, dy / y.shape[0])
    return value, grads
