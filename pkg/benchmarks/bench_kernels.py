"""Time the hot kernels under both backends.

    python benchmarks/bench_kernels.py [--envs 64] [--steps 200]

The simulator step and GAE are run with the numba loops and with the
pure-numpy path side by side.  ``PMP_BACKEND`` only sets the default used
elsewhere; here both paths are selected explicitly.
"""
import argparse
import timeit

import numpy as np

from pmp import _accel
from pmp.sim import Simulator, Terrain, build_model, builtin_body
from pmp.trainer import compute_gae


def bench_sim(backend, envs, steps):
    model = build_model(builtin_body("walker"), terrain=Terrain((0.0, 0.05, 0.1), x0=0.5, dx=0.5))
    sim = Simulator(model, backend=backend)
    rng = np.random.default_rng(0)
    s = sim.new_state(envs)
    s.root[:, 1] = 1.05
    targets = rng.uniform(-0.5, 0.5, (steps,) + s.q.shape)
    sim.step(s, targets[0])  # compile / warm up

    def run():
        st = s
        for t in targets:
            st = sim.step(st, t)

    return min(timeit.repeat(run, number=1, repeat=3)) / steps


def bench_gae(backend, envs, horizon=32, reps=200):
    rng = np.random.default_rng(1)
    r = rng.normal(size=(horizon, envs))
    v = rng.normal(size=(horizon + 1, envs))
    d = (rng.random((horizon, envs)) < 0.05).astype(float)
    compute_gae(r, v, d, backend=backend)
    return min(timeit.repeat(lambda: compute_gae(r, v, d, backend=backend), number=reps, repeat=3)) / reps


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--envs", type=int, default=64)
    p.add_argument("--steps", type=int, default=200)
    args = p.parse_args()
    backends = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    print(f"default backend (PMP_BACKEND): {_accel.BACKEND}; worlds: {args.envs}")
    print(f"{'kernel':<22}{'backend':<10}{'time per call':>16}")
    results = {}
    for name, fn in (("sim.step (walker)", lambda b: bench_sim(b, args.envs, args.steps)),
                     ("compute_gae (T=32)", lambda b: bench_gae(b, args.envs))):
        for b in backends:
            results[name, b] = fn(b)
            print(f"{name:<22}{b:<10}{results[name, b] * 1e3:>13.3f} ms")
        if len(backends) == 2:
            print(f"{'':<22}{'speedup':<10}{results[name, 'numpy'] / results[name, 'numba']:>15.1f}x")


if __name__ == "__main__":
    main()
