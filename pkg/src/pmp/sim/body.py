"""Character/scene definitions and their compilation into flat kernel arrays.

Character file schema (JSON, ``format_version`` 1)::

    {
      "format_version": 1,
      "name": "walker",
      "base": "floating" | "fixed" | "rail",      # rail: only root x is free
      "links": [
        {"name": "torso", "mass": 8.0, "half_extents": [0.08, 0.2],
         "com": [0.0, 0.0],                         # link frame, optional
         "inertia": 0.1,                            # optional, box formula otherwise
         "capsule": {"a": [..], "b": [..], "radius": r},   # optional override
         "collide": true}
      ],
      "joints": [
        {"name": "hip_l", "parent": "torso", "child": "thigh_l",
         "anchor": [0.0, -0.2], "axis": 1, "rest": -1.5708,
         "limits": [-1.5, 1.5], "torque_limit": 80.0, "armature": 0.02}
      ],
      "gains": [{"joint": "hip_l", "kp": 300.0, "kd": 20.0}],
      "markers": {"feet": [["shin_l", [0.4, 0.0]]], ...},
      "inward": {"palm": [1.0, 0.0], ...}           # body-frame "inside of hand" axes
    }

The first link is the root.  A link's frame sits at its parent joint; its
local +x runs along the limb.  Capsule geometry defaults to the segment
``com -/+ (hx, 0)`` with radius ``hy``.
"""
from __future__ import annotations

import json
from collections import namedtuple
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
BASE_LOCKS = {
    "floating": (False, False, False),
    "fixed": (True, True, True),
    "rail": (False, True, True),
}


class BodyDefError(ValueError):
    pass


@dataclass
class LinkDef:
    name: str
    mass: float
    half_extents: tuple
    com: tuple = (0.0, 0.0)
    inertia: float | None = None
    capsule: tuple | None = None  # (a, b, radius)
    collide: bool = True

    def box_inertia(self):
        if self.inertia is not None:
            return float(self.inertia)
        w, h = 2.0 * self.half_extents[0], 2.0 * self.half_extents[1]
        return self.mass * (w * w + h * h) / 12.0

    def capsule_geometry(self):
        if self.capsule is not None:
            a, b, r = self.capsule
            return np.asarray(a, float), np.asarray(b, float), float(r)
        hx, hy = self.half_extents
        c = np.asarray(self.com, float)
        half = max(hx - hy, 0.0)
        return c - (half, 0.0), c + (half, 0.0), float(hy)


@dataclass
class JointDef:
    name: str
    parent: str
    child: str
    anchor: tuple
    limits: tuple
    torque_limit: float
    axis: int = 1
    rest: float = 0.0
    armature: float = 0.01


@dataclass
class BodyDef:
    name: str
    links: list
    joints: list
    base: str = "floating"
    kp: dict = field(default_factory=dict)
    kd: dict = field(default_factory=dict)
    markers: dict = field(default_factory=dict)
    inward: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def link_names(self):
        return [l.name for l in self.links]

    @property
    def joint_names(self):
        return [j.name for j in self.joints]

    @property
    def dof(self):
        return len(self.joints)

    def link_index(self, name):
        try:
            return self.link_names.index(name)
        except ValueError:
            raise KeyError(f"unknown link {name!r}") from None

    def joint_index(self, name):
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise KeyError(f"unknown joint {name!r}") from None

    def validate(self):
        if self.base not in BASE_LOCKS:
            raise BodyDefError(f"base must be one of {sorted(BASE_LOCKS)}")
        if not self.links:
            raise BodyDefError("a body needs at least one link")
        names = self.link_names
        if len(set(names)) != len(names):
            raise BodyDefError("duplicate link names")
        if len(set(self.joint_names)) != len(self.joints):
            raise BodyDefError("duplicate joint names")
        for l in self.links:
            if not (l.mass > 0 and l.box_inertia() > 0):
                raise BodyDefError(f"link {l.name}: mass and inertia must be positive")
        if len(self.joints) != len(self.links) - 1:
            raise BodyDefError("every non-root link needs exactly one parent joint")
        seen_child = set()
        for j in self.joints:
            if j.parent not in names or j.child not in names:
                raise BodyDefError(f"joint {j.name}: unknown parent/child link")
            if j.child == names[0]:
                raise BodyDefError(f"joint {j.name}: root link cannot be a child")
            if j.child in seen_child:
                raise BodyDefError(f"link {j.child} has two parent joints")
            seen_child.add(j.child)
            if names.index(j.parent) >= names.index(j.child):
                raise BodyDefError(f"joint {j.name}: links must be listed parents-first")
            lo, hi = j.limits
            if not lo < hi:
                raise BodyDefError(f"joint {j.name}: limits need lo < hi")
            if j.axis not in (-1, 1):
                raise BodyDefError(f"joint {j.name}: axis must be +1 or -1")
            if j.torque_limit <= 0 or j.armature < 0:
                raise BodyDefError(f"joint {j.name}: bad torque limit or armature")
        for group, entries in self.markers.items():
            for link, _ in entries:
                if link not in names:
                    raise BodyDefError(f"marker group {group}: unknown link {link}")
        for link in self.inward:
            if link not in names:
                raise BodyDefError(f"inward axis: unknown link {link}")

    def marker_points(self, group):
        """(link ids, local points) for a marker group."""
        entries = self.markers.get(group, [])
        ids = np.array([self.link_index(l) for l, _ in entries], dtype=np.int64)
        pts = np.array([p for _, p in entries], dtype=float).reshape(-1, 2)
        return ids, pts

    # -- serialization -------------------------------------------------
    def to_dict(self):
        links = []
        for l in self.links:
            d = {"name": l.name, "mass": l.mass, "half_extents": list(l.half_extents),
                 "com": list(l.com), "collide": l.collide}
            if l.inertia is not None:
                d["inertia"] = l.inertia
            if l.capsule is not None:
                a, b, r = l.capsule
                d["capsule"] = {"a": list(a), "b": list(b), "radius": r}
            links.append(d)
        joints = [{"name": j.name, "parent": j.parent, "child": j.child,
                   "anchor": list(j.anchor), "axis": j.axis, "rest": j.rest,
                   "limits": list(j.limits), "torque_limit": j.torque_limit,
                   "armature": j.armature} for j in self.joints]
        gains = [{"joint": n, "kp": self.kp.get(n, 0.0), "kd": self.kd.get(n, 0.0)}
                 for n in self.joint_names]
        return {
            "format_version": FORMAT_VERSION, "name": self.name, "base": self.base,
            "links": links, "joints": joints, "gains": gains,
            "markers": {g: [[l, list(p)] for l, p in v] for g, v in self.markers.items()},
            "inward": {k: list(v) for k, v in self.inward.items()},
        }

    @classmethod
    def from_dict(cls, d):
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise BodyDefError(f"unsupported character file version {version!r}")
        try:
            links = []
            for l in d["links"]:
                cap = l.get("capsule")
                if cap is not None:
                    cap = (tuple(cap["a"]), tuple(cap["b"]), float(cap["radius"]))
                links.append(LinkDef(l["name"], float(l["mass"]), tuple(l["half_extents"]),
                                     tuple(l.get("com", (0.0, 0.0))), l.get("inertia"),
                                     cap, bool(l.get("collide", True))))
            joints = [JointDef(j["name"], j["parent"], j["child"], tuple(j["anchor"]),
                               tuple(j["limits"]), float(j["torque_limit"]),
                               int(j.get("axis", 1)), float(j.get("rest", 0.0)),
                               float(j.get("armature", 0.01))) for j in d["joints"]]
            kp = {g["joint"]: float(g["kp"]) for g in d.get("gains", [])}
            kd = {g["joint"]: float(g["kd"]) for g in d.get("gains", [])}
            markers = {g: [(l, tuple(p)) for l, p in v] for g, v in d.get("markers", {}).items()}
            inward = {k: tuple(v) for k, v in d.get("inward", {}).items()}
        except (KeyError, TypeError) as exc:
            raise BodyDefError(f"malformed character file: {exc}") from exc
        return cls(d["name"], links, joints, d.get("base", "floating"), kp, kd, markers, inward)


def load_body(path):
    with open(path) as fh:
        return BodyDef.from_dict(json.load(fh))


def save_body(body, path):
    Path(path).write_text(json.dumps(body.to_dict(), indent=1))


def builtin_body(name):
    """Load one of the packaged characters (walker, gripper, arm, cart_hauler)."""
    return load_body(Path(__file__).resolve().parent.parent / "assets" / f"{name}.json")


def null_body():
    """A single fixed, non-colliding link; for object-only scenes."""
    return BodyDef("null", [LinkDef("anchor", 1.0, (0.05, 0.05), collide=False)], [], base="fixed")


# -- scene objects, terrain, parameters ---------------------------------

@dataclass
class ObjectDef:
    """A planar disk body (rod cross-section, ball, cart handle)."""
    name: str
    radius: float
    mass: float
    inertia: float | None = None
    gravity: bool = True
    lock: tuple = (False, False, False)
    lin_damping: float = 0.0
    ang_damping: float = 0.0
    ground_contact: bool = True

    def disk_inertia(self):
        return float(self.inertia) if self.inertia is not None else 0.5 * self.mass * self.radius ** 2


@dataclass
class Terrain:
    """Piecewise-constant ground height strip; flat ground by default."""
    heights: tuple = (0.0,)
    x0: float = 0.0
    dx: float = 1.0


@dataclass
class SimParams:
    gravity: tuple = (0.0, -9.81)
    contact_stiffness: float = 2.0e4
    contact_damping: float = 100.0
    tangential_damping: float = 100.0
    friction: float = 1.0
    contact_threshold: float = 0.5  # N, binary contact flag
    contacts: bool = True
    max_speed: float = 1.0e3  # beyond this a state counts as diverged


ModelArrays = namedtuple("ModelArrays", [
    "parent", "link_joint", "anchor", "rest", "axis", "com", "mass", "inertia",
    "cap_a", "cap_b", "cap_r", "anc",
    "joint_link", "q_lo", "q_hi", "tau_lim", "kp", "kd", "armature", "root_lock",
    "obj_radius", "obj_mass", "obj_inertia", "obj_gravity", "obj_lock", "obj_lin_damp",
    "obj_ang_damp", "cand_kind", "cand_link", "cand_end", "cand_obj",
    "ter_h", "ter_x0", "ter_dx", "gravity", "kn", "kdn", "kt", "mu", "max_speed",
])

GROUND, LINK_OBJECT, OBJECT_GROUND = 0, 1, 2


@dataclass
class Model:
    body: BodyDef
    objects: list
    terrain: Terrain
    params: SimParams
    arrays: ModelArrays

    @property
    def n_links(self):
        return len(self.body.links)

    @property
    def n_joints(self):
        return self.body.dof

    @property
    def n_objects(self):
        return len(self.objects)

    @property
    def n_candidates(self):
        return len(self.arrays.cand_kind)

    def object_index(self, name):
        for i, o in enumerate(self.objects):
            if o.name == name:
                return i
        raise KeyError(f"unknown object {name!r}")

    def terrain_height(self, x):
        a = self.arrays
        idx = np.clip(np.floor((np.asarray(x) - a.ter_x0) / a.ter_dx), 0, len(a.ter_h) - 1)
        return a.ter_h[idx.astype(np.int64)]


def build_model(body=None, objects=(), terrain=None, params=None):
    body = body if body is not None else null_body()
    objects = list(objects)
    terrain = terrain or Terrain()
    params = params or SimParams()
    nl, nj, no = len(body.links), body.dof, len(objects)

    parent = np.full(nl, -1, np.int64)
    link_joint = np.full(nl, -1, np.int64)
    anchor = np.zeros((nl, 2))
    rest = np.zeros(nl)
    axis = np.zeros(nl)
    joint_link = np.zeros(nj, np.int64)
    for j, jd in enumerate(body.joints):
        c = body.link_index(jd.child)
        parent[c] = body.link_index(jd.parent)
        link_joint[c] = j
        anchor[c] = jd.anchor
        rest[c] = jd.rest
        axis[c] = jd.axis
        joint_link[j] = c

    anc = np.zeros((nl, nl), bool)
    for i in range(nl):
        l = i
        while l >= 0:
            anc[i, l] = True
            l = parent[l]

    caps = [l.capsule_geometry() for l in body.links]
    cand_kind, cand_link, cand_end, cand_obj = [], [], [], []
    for i, l in enumerate(body.links):
        if not l.collide:
            continue
        for end in (0, 1):
            cand_kind.append(GROUND); cand_link.append(i); cand_end.append(end); cand_obj.append(-1)
        for o in range(no):
            cand_kind.append(LINK_OBJECT); cand_link.append(i); cand_end.append(-1); cand_obj.append(o)
    for o, od in enumerate(objects):
        if od.ground_contact:
            cand_kind.append(OBJECT_GROUND); cand_link.append(-1); cand_end.append(-1); cand_obj.append(o)
    if not params.contacts:
        cand_kind, cand_link, cand_end, cand_obj = [], [], [], []

    gains_missing = [n for n in body.joint_names if n not in body.kp]
    if gains_missing:
        raise BodyDefError(f"missing PD gains for joints {gains_missing}")

    arrays = ModelArrays(
        parent=parent, link_joint=link_joint, anchor=anchor, rest=rest, axis=axis,
        com=np.array([l.com for l in body.links], float).reshape(nl, 2),
        mass=np.array([l.mass for l in body.links], float),
        inertia=np.array([l.box_inertia() for l in body.links], float),
        cap_a=np.array([c[0] for c in caps]).reshape(nl, 2),
        cap_b=np.array([c[1] for c in caps]).reshape(nl, 2),
        cap_r=np.array([c[2] for c in caps], float),
        anc=anc,
        joint_link=joint_link,
        q_lo=np.array([j.limits[0] for j in body.joints], float),
        q_hi=np.array([j.limits[1] for j in body.joints], float),
        tau_lim=np.array([j.torque_limit for j in body.joints], float),
        kp=np.array([body.kp[n] for n in body.joint_names], float),
        kd=np.array([body.kd.get(n, 0.0) for n in body.joint_names], float),
        armature=np.array([j.armature for j in body.joints], float),
        root_lock=np.array(BASE_LOCKS[body.base], bool),
        obj_radius=np.array([o.radius for o in objects], float),
        obj_mass=np.array([o.mass for o in objects], float),
        obj_inertia=np.array([o.disk_inertia() for o in objects], float),
        obj_gravity=np.array([o.gravity for o in objects], bool),
        obj_lock=np.array([o.lock for o in objects], bool).reshape(no, 3),
        obj_lin_damp=np.array([o.lin_damping for o in objects], float),
        obj_ang_damp=np.array([o.ang_damping for o in objects], float),
        cand_kind=np.array(cand_kind, np.int64),
        cand_link=np.array(cand_link, np.int64),
        cand_end=np.array(cand_end, np.int64),
        cand_obj=np.array(cand_obj, np.int64),
        ter_h=np.asarray(terrain.heights, float),
        ter_x0=float(terrain.x0), ter_dx=float(terrain.dx),
        gravity=np.asarray(params.gravity, float),
        kn=float(params.contact_stiffness), kdn=float(params.contact_damping),
        kt=float(params.tangential_damping), mu=float(params.friction),
        max_speed=float(params.max_speed),
    )
    if any(o.mass <= 0 or o.radius <= 0 for o in objects):
        raise BodyDefError("objects need positive mass and radius")
    return Model(body, objects, terrain, params, arrays)
