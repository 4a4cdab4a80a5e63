"""JSON forms of instances and plans: human-diffable, deterministic dumps.

An instance document holds `generator` (reproducibility header), `resources`,
`vm_types`, `servers`, the dense row-major `n` matrix, `d_new`, and `costs`.
Integer quantities are written as exact JSON integers.  A plan document
mirrors the Plan arrays and may carry a `solve` block (objective, algorithm)
that validation ignores.
"""

from __future__ import annotations

import json

import numpy as np

from .generator import SERVER_TYPES
from .model import Instance, Plan, ServerSpec, VmSpec


def _num(v):
    f = float(v)
    return int(f) if f.is_integer() else f


def _nums(arr):
    a = np.asarray(arr)
    if a.ndim == 1:
        return [_num(v) for v in a]
    return [[_num(v) for v in row] for row in a]


def _ints(arr):
    a = np.asarray(arr)
    if a.ndim == 1:
        return [int(v) for v in a]
    return [[int(v) for v in row] for row in a]


def _server_type_id(sv: ServerSpec):
    """Catalog row index when the server matches one exactly, else None."""
    sig = tuple(float(c) for c in sv.capacity) + (float(sv.max_power),)
    for t, row in enumerate(SERVER_TYPES):
        if sig == tuple(float(v) for v in row):
            return t
    return None


def instance_to_dict(inst: Instance, generator_meta=None) -> dict:
    return {
        "generator": generator_meta if generator_meta is not None else {},
        "resources": list(inst.resources),
        "vm_types": [{"demand": _nums(vm.demand)} for vm in inst.vm_types],
        "servers": [{"type": _server_type_id(sv),
                     "capacity": _nums(sv.capacity),
                     "p_max": _num(sv.max_power)} for sv in inst.servers],
        "n": _ints(inst.n),
        "d_new": _ints(inst.d_new),
        "costs": {"run": _nums(inst.c_run), "assign": _nums(inst.c_assign),
                  "mig": _nums(inst.c_mig), "new": _nums(inst.c_new)},
    }


def instance_from_dict(doc: dict):
    """Returns (Instance, generator_meta)."""
    vms = tuple(VmSpec(np.array(v["demand"], dtype=float))
                for v in doc["vm_types"])
    servers = tuple(ServerSpec(np.array(s["capacity"], dtype=float),
                               float(s.get("p_max", 0.0)))
                    for s in doc["servers"])
    costs = doc["costs"]
    inst = Instance(
        resources=tuple(doc["resources"]), vm_types=vms, servers=servers,
        n=np.array(doc["n"], dtype=np.int64),
        d_new=np.array(doc["d_new"], dtype=np.int64),
        c_run=np.array(costs["run"], dtype=float),
        c_assign=np.array(costs["assign"], dtype=float),
        c_mig=np.array(costs["mig"], dtype=float),
        c_new=np.array(costs["new"], dtype=float),
    )
    return inst, doc.get("generator", {})


def plan_to_dict(plan: Plan, solve_meta=None) -> dict:
    doc = {"x": _ints(plan.x), "y": _ints(plan.y),
           "z": _ints(plan.z), "x_new": _ints(plan.x_new)}
    if solve_meta:
        doc["solve"] = solve_meta
    return doc


def plan_from_dict(doc: dict) -> Plan:
    return Plan(x=np.array(doc["x"], dtype=np.int64),
                y=np.array(doc["y"], dtype=np.int64),
                z=np.array(doc["z"], dtype=np.int64),
                x_new=np.array(doc["x_new"], dtype=np.int64))


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def write_instance(path, inst: Instance, generator_meta=None):
    with open(path, "w") as fh:
        fh.write(dumps(instance_to_dict(inst, generator_meta)))


def read_instance(path):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def write_plan(path, plan: Plan, solve_meta=None):
    with open(path, "w") as fh:
        fh.write(dumps(plan_to_dict(plan, solve_meta)))


def read_plan(path) -> Plan:
    with open(path) as fh:
        return plan_from_dict(json.load(fh))
