"""Generalized advantage estimation over (T, E) reward arrays."""
import numpy as np

from .. import _accel


def _gae_numpy(rewards, values, dones, gamma, lam):
    T = rewards.shape[0]
    adv = np.zeros_like(rewards)
    last = np.zeros(rewards.shape[1:])
    for t in range(T - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * live - values[t]
        last = delta + gamma * lam * live * last
        adv[t] = last
    return adv


@_accel.njit
def _gae_numba(rewards, values, dones, gamma, lam):
    T, E = rewards.shape
    adv = np.zeros((T, E))
    for e in range(E):
        last = 0.0
        for t in range(T - 1, -1, -1):
            live = 1.0 - dones[t, e]
            delta = rewards[t, e] + gamma * values[t + 1, e] * live - values[t, e]
            last = delta + gamma * lam * live * last
            adv[t, e] = last
    return adv


def compute_gae(rewards, values, dones, gamma=0.99, lam=0.95, backend=None):
    """Advantages and returns; ``values`` holds one more step than ``rewards``.

    A done flag at step t stops bootstrapping from ``values[t+1]``.  Inputs
    may be 1-D (single environment) or (T, E).
    """
    r = np.asarray(rewards, float)
    v = np.asarray(values, float)
    d = np.asarray(dones, float)
    single = r.ndim == 1
    if single:
        r, v, d = r[:, None], v[:, None], d[:, None]
    if v.shape[0] != r.shape[0] + 1 or v.shape[1:] != r.shape[1:] or d.shape != r.shape:
        raise ValueError(f"length mismatch: rewards {r.shape}, values {v.shape}, dones {d.shape}")
    if not 0.0 < gamma <= 1.0 or not 0.0 <= lam <= 1.0:
        raise ValueError("need 0 < gamma <= 1 and 0 <= lam <= 1")
    backend = backend or _accel.BACKEND
    if backend == "numba" and _accel.HAVE_NUMBA:
        adv = _gae_numba(np.ascontiguousarray(r), np.ascontiguousarray(v), np.ascontiguousarray(d),
                         float(gamma), float(lam))
    else:
        adv = _gae_numpy(r, v, d, gamma, lam)
    ret = adv + v[:-1]
    return (adv[:, 0], ret[:, 0]) if single else (adv, ret)
