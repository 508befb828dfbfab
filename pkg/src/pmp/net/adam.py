"""Adam optimizer over a list of parameter arrays."""
import numpy as np


class Adam:
    def __init__(self, params, lr=5e-5, beta1=0.9, beta2=0.999, eps=1e-8, max_grad_norm=None):
        self.lr = float(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.max_grad_norm = max_grad_norm
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        """Update ``params`` in place and return them."""
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("parameter/gradient count mismatch")
        for p, g, m in zip(params, grads, self.m):
            if p.shape != m.shape or np.shape(g) != m.shape:
                raise ValueError(f"shape mismatch {p.shape} vs {np.shape(g)}")
            if not np.isfinite(g).all():
                raise FloatingPointError("non-finite gradient")
        scale = 1.0
        if self.max_grad_norm is not None:
            norm = np.sqrt(sum(float((g * g).sum()) for g in grads))
            if norm > self.max_grad_norm:
                scale = self.max_grad_norm / norm
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = g * scale
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params

    def to_arrays(self, prefix=""):
        out = {f"{prefix}t": np.array(self.t), f"{prefix}lr": np.array(self.lr)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"{prefix}m{i}"] = m
            out[f"{prefix}v{i}"] = v
        return out

    def load_arrays(self, arrays, prefix=""):
        self.t = int(arrays[f"{prefix}t"])
        self.lr = float(arrays[f"{prefix}lr"])
        for i in range(len(self.m)):
            self.m[i] = np.asarray(arrays[f"{prefix}m{i}"], float).copy()
            self.v[i] = np.asarray(arrays[f"{prefix}v{i}"], float).copy()
