"""Checkpoint files: a numpy ``.npz`` archive with a versioned JSON header.

Layout: ``__header__`` holds ``{"format": "pmp-checkpoint", "version": 1,
"nets": {name: {"sizes", "hidden", "output"}}, "optimizers": [names],
"meta": {...}}``; every tensor is stored as ``net/<name>/<key>`` or
``opt/<name>/<key>``; extra arrays go under ``extra/<key>``.
"""
import json
from pathlib import Path

import numpy as np

from .adam import Adam
from .mlp import Mlp

FORMAT = "pmp-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, nets, optimizers=None, meta=None, extra=None):
    optimizers = optimizers or {}
    header = {
        "format": FORMAT, "version": VERSION,
        "nets": {k: {"sizes": n.sizes, "hidden": n.hidden, "output": n.output} for k, n in nets.items()},
        "optimizers": sorted(optimizers),
        "meta": meta or {},
    }
    arrays = {"__header__": np.array(json.dumps(header, sort_keys=True))}
    for k, n in nets.items():
        arrays.update(n.to_arrays(prefix=f"net/{k}/"))
    for k, o in optimizers.items():
        arrays.update(o.to_arrays(prefix=f"opt/{k}/"))
    for k, v in (extra or {}).items():
        arrays[f"extra/{k}"] = np.asarray(v)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, **arrays)
    tmp.replace(path)


def load_checkpoint(path):
    """Return ``(nets, optimizer_arrays, meta, extra)``.

    Optimizer state comes back as raw arrays keyed by optimizer name, to be
    applied with :meth:`Adam.load_arrays` once the caller has built the
    optimizer over the right parameter list.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as z:
        data = {k: z[k] for k in z.files}
    if "__header__" not in data:
        raise CheckpointError("missing checkpoint header")
    header = json.loads(str(data["__header__"]))
    if header.get("format") != FORMAT:
        raise CheckpointError(f"not a checkpoint file: {path}")
    if header.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")
    nets = {}
    for k, spec in header["nets"].items():
        net = Mlp(spec["sizes"], spec["hidden"], spec["output"])
        net.load_arrays(data, prefix=f"net/{k}/")
        nets[k] = net
    opts = {}
    for k in header["optimizers"]:
        pre = f"opt/{k}/"
        opts[k] = {key[len(pre):]: v for key, v in data.items() if key.startswith(pre)}
    extra = {key[6:]: v for key, v in data.items() if key.startswith("extra/")}
    return nets, opts, header["meta"], extra


def restore_optimizer(opt: Adam, arrays):
    opt.load_arrays(arrays)
    return opt
