import numpy as np
import pytest

from pmp.sim import BodyDef, ObjectDef, SimParams, Simulator, build_model
from pmp.sim.body import JointDef, LinkDef


def pendulum_body(kp=0.0, kd=0.0, base="fixed", mass=1.0, length=0.5):
    links = [LinkDef("base", 1.0, (0.05, 0.05), collide=False),
             LinkDef("arm", mass, (length / 2, 0.02), com=(length / 2, 0.0), collide=False)]
    joints = [JointDef("pivot", "base", "arm", (0.0, 0.0), (-10.0, 10.0), 1e3, armature=0.01)]
    return BodyDef("pendulum", links, joints, base, {"pivot": kp}, {"pivot": kd})


def chain_body(base="floating", n=3):
    links = [LinkDef("base", 2.0, (0.1, 0.05))]
    joints, kp, kd = [], {}, {}
    for i in range(n):
        parent = "base" if i == 0 else f"l{i - 1}"
        links.append(LinkDef(f"l{i}", 1.0 - 0.2 * i, (0.15, 0.03), com=(0.15, 0.0)))
        anchor = (0.1, 0.0) if i == 0 else (0.3, 0.0)
        joints.append(JointDef(f"j{i}", parent, f"l{i}", anchor, (-2.5, 2.5), 20.0, axis=1 if i % 2 else -1,
                               rest=0.3 * i))
        kp[f"j{i}"] = 30.0
        kd[f"j{i}"] = 1.0
    return BodyDef("chain", links, joints, base, kp, kd)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def free_rod_model(mass=4.0, inertia=None):
    return build_model(None, [ObjectDef("rod", 0.05, mass, inertia=inertia, gravity=False,
                                        ground_contact=False)],
                       params=SimParams(gravity=(0.0, 0.0)))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", None) == "call":
                lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split(":")[0]):
            terminalreporter.write_line(line)
