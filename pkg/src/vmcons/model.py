"""Consolidation MILP: build, check and cost virtual machine placement plans.

Decision variables, per VM type i and server j: x[i,j] old VMs placed, z[i,j]
migrations beyond the current count, x_new[i,j] newly requested VMs, and a
binary y[j] switching server j on.  The objective charges assignment, running,
migration and new-placement costs; capacity rows couple every resource to y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import LE, EQ, LinearProgram
from .mip import BINARY, INTEGER, MipProblem


class DimensionMismatch(ValueError):
    """Plan arrays do not match the instance's VM/server counts."""


def _frozen_array(obj, name, value, dtype=float, shape=None):
    arr = np.asarray(value, dtype=dtype)
    if shape is not None and arr.shape != shape:
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)
    return arr


@dataclass(frozen=True)
class VmSpec:
    """Per-resource demand of one VM type."""

    demand: np.ndarray

    def __post_init__(self):
        d = _frozen_array(self, "demand", self.demand)
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("VM demands must be finite and non-negative")


@dataclass(frozen=True)
class ServerSpec:
    """Per-resource capacity and peak power draw of one server."""

    capacity: np.ndarray
    max_power: float = 0.0

    def __post_init__(self):
        s = _frozen_array(self, "capacity", self.capacity)
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("server capacities must be finite and non-negative")
        if not self.max_power >= 0:
            raise ValueError("max_power must be non-negative")


@dataclass(frozen=True)
class Instance:
    """One consolidation problem: catalog, current allocation, demand, costs."""

    resources: tuple
    vm_types: tuple
    servers: tuple
    n: np.ndarray        # current allocation, |I| x |J|
    d_new: np.ndarray    # new VMs requested per type, |I|
    c_run: np.ndarray    # |J|
    c_assign: np.ndarray  # |I| x |J|
    c_mig: np.ndarray    # |I| x |J|
    c_new: np.ndarray    # |I| x |J|

    def __post_init__(self):
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "vm_types", tuple(self.vm_types))
        object.__setattr__(self, "servers", tuple(self.servers))
        I, J, R = len(self.vm_types), len(self.servers), len(self.resources)
        if I == 0 or J == 0 or R == 0:
            raise ValueError("instance needs at least one VM type, server and resource")
        for vm in self.vm_types:
            if vm.demand.shape != (R,):
                raise DimensionMismatch("VM demand length != number of resources")
        for sv in self.servers:
            if sv.capacity.shape != (R,):
                raise DimensionMismatch("server capacity length != number of resources")
        n = _frozen_array(self, "n", self.n, dtype=np.int64, shape=(I, J))
        d_new = _frozen_array(self, "d_new", self.d_new, dtype=np.int64, shape=(I,))
        if np.any(n < 0) or np.any(d_new < 0):
            raise ValueError("n and d_new must be non-negative")
        for name, shape in (("c_run", (J,)), ("c_assign", (I, J)),
                            ("c_mig", (I, J)), ("c_new", (I, J))):
            arr = _frozen_array(self, name, getattr(self, name), shape=shape)
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite and non-negative")

    @property
    def num_vm_types(self):
        return len(self.vm_types)

    @property
    def num_servers(self):
        return len(self.servers)

    @property
    def num_resources(self):
        return len(self.resources)

    @property
    def u(self):
        """Demand matrix, |I| x |R|."""
        return np.stack([vm.demand for vm in self.vm_types])

    @property
    def s(self):
        """Capacity matrix, |J| x |R|."""
        return np.stack([sv.capacity for sv in self.servers])

    @property
    def d(self):
        """Old-VM totals per type: d_i = sum_j n[i,j]."""
        return self.n.sum(axis=1)


@dataclass(frozen=True)
class Plan:
    """Candidate placement; entries must be integral, feasibility is checked separately."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    x_new: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z", "x_new"):
            raw = np.asarray(getattr(self, name))
            if raw.dtype.kind == "f":
                if np.any(np.abs(raw - np.rint(raw)) > 0):
                    raise ValueError(f"plan field {name} has fractional entries")
                raw = np.rint(raw)
            _frozen_array(self, name, raw, dtype=np.int64)
        if self.x.ndim != 2 or self.x.shape != self.z.shape or self.x.shape != self.x_new.shape:
            raise DimensionMismatch("x, z and x_new must share one |I| x |J| shape")
        if self.y.shape != (self.x.shape[1],):
            raise DimensionMismatch("y length must equal the server count")


@dataclass(frozen=True)
class PlanViolation:
    family: str   # capacity | migration | old_demand | new_demand | domain | upper_bound
    index: tuple
    slack: float


@dataclass(frozen=True)
class VarMap:
    """Column layout of the MILP: [x | z | x_new | y], each block row-major in (i, j)."""

    num_vm_types: int
    num_servers: int

    def x(self, i, j):
        return i * self.num_servers + j

    def z(self, i, j):
        return self.num_vm_types * self.num_servers + i * self.num_servers + j

    def x_new(self, i, j):
        return 2 * self.num_vm_types * self.num_servers + i * self.num_servers + j

    def y(self, j):
        return 3 * self.num_vm_types * self.num_servers + j

    @property
    def num_vars(self):
        return 3 * self.num_vm_types * self.num_servers + self.num_servers

    @property
    def x_slice(self):
        return slice(0, self.num_vm_types * self.num_servers)

    @property
    def z_slice(self):
        b = self.num_vm_types * self.num_servers
        return slice(b, 2 * b)

    @property
    def x_new_slice(self):
        b = self.num_vm_types * self.num_servers
        return slice(2 * b, 3 * b)

    @property
    def y_slice(self):
        b = self.num_vm_types * self.num_servers
        return slice(3 * b, 3 * b + self.num_servers)


def upper_bound_v(inst: Instance, i, j) -> int:
    """Largest useful x[i,j]: min of total old VMs and the single-server fit bound.

    Resources the VM does not consume (u = 0) impose no restriction.
    """
    u = inst.vm_types[i].demand
    s = inst.servers[j].capacity
    fit = math.inf
    for r in range(inst.num_resources):
        if u[r] > 0:
            fit = min(fit, math.floor(s[r] / u[r]))
    d_i = int(inst.n[i].sum())
    return int(min(d_i, fit))


def build_mip(inst: Instance, assignment_cost_mode: str = "plan"):
    """Assemble the consolidation MILP; returns (MipProblem, VarMap).

    assignment_cost_mode picks what the assignment term multiplies: "plan"
    charges c_assign against the decided placement x (the default), "current"
    charges it against the existing allocation n, which is a constant and is
    folded into the objective offset.
    """
    if assignment_cost_mode not in ("plan", "current"):
        raise ValueError("assignment_cost_mode must be 'plan' or 'current'")
    I, J, R = inst.num_vm_types, inst.num_servers, inst.num_resources
    vmap = VarMap(I, J)
    nv = vmap.num_vars

    c = np.zeros(nv)
    offset = 0.0
    if assignment_cost_mode == "plan":
        c[vmap.x_slice] = inst.c_assign.ravel()
    else:
        offset = float((inst.c_assign * inst.n).sum())
    c[vmap.z_slice] = inst.c_mig.ravel()
    c[vmap.x_new_slice] = inst.c_new.ravel()
    c[vmap.y_slice] = inst.c_run

    u = inst.u
    s = inst.s
    num_rows = R * J + I * J + 2 * I
    A = np.zeros((num_rows, nv))
    b = np.zeros(num_rows)
    senses = []
    row = 0

    # (1b) capacity: sum_i u[i,r] (x + x_new) <= s[j,r] y_j, for every r, j
    for r in range(R):
        for j in range(J):
            for i in range(I):
                A[row, vmap.x(i, j)] = u[i, r]
                A[row, vmap.x_new(i, j)] = u[i, r]
            A[row, vmap.y(j)] = -s[j, r]
            senses.append(LE)
            row += 1

    # (1c) migrations: x - z <= n
    for i in range(I):
        for j in range(J):
            A[row, vmap.x(i, j)] = 1.0
            A[row, vmap.z(i, j)] = -1.0
            b[row] = float(inst.n[i, j])
            senses.append(LE)
            row += 1

    # (1d) every old VM placed: sum_j x = d_i
    d = inst.d
    for i in range(I):
        for j in range(J):
            A[row, vmap.x(i, j)] = 1.0
        b[row] = float(d[i])
        senses.append(EQ)
        row += 1

    # (1e) every new VM placed: sum_j x_new = d_new_i
    for i in range(I):
        for j in range(J):
            A[row, vmap.x_new(i, j)] = 1.0
        b[row] = float(inst.d_new[i])
        senses.append(EQ)
        row += 1

    lb = np.zeros(nv)
    ub = np.full(nv, np.inf)
    for i in range(I):
        for j in range(J):
            v = float(upper_bound_v(inst, i, j))
            ub[vmap.x(i, j)] = v
            # implied: migrations never exceed assignments, x <= v
            ub[vmap.z(i, j)] = v
            # implied by the new-demand equality and nonnegativity
            ub[vmap.x_new(i, j)] = float(inst.d_new[i])
    ub[vmap.y_slice] = 1.0

    integ = np.full(nv, INTEGER, dtype=np.int8)
    integ[vmap.y_slice] = BINARY

    base = LinearProgram(c, A, tuple(senses), b, lb, ub, offset)
    return MipProblem(base, integ), vmap


def extract_plan(vmap: VarMap, vector) -> Plan:
    """Split a solver incumbent back into the four plan arrays."""
    v = np.asarray(vector, dtype=float)
    if v.shape != (vmap.num_vars,):
        raise DimensionMismatch("solution vector length does not match the map")
    I, J = vmap.num_vm_types, vmap.num_servers
    xr = np.rint(v)
    return Plan(xr[vmap.x_slice].reshape(I, J), xr[vmap.y_slice],
                xr[vmap.z_slice].reshape(I, J), xr[vmap.x_new_slice].reshape(I, J))


def check_plan(inst: Instance, plan: Plan) -> list:
    """Re-evaluate every model constraint in exact integer arithmetic.

    Returns one PlanViolation per broken condition; an empty list certifies
    the plan feasible.  Slack conventions: inequality rows report rhs - lhs
    (negative means violated), equality rows report lhs - rhs (non-zero means
    violated), domain records report the offending value.
    """
    I, J = inst.num_vm_types, inst.num_servers
    if plan.x.shape != (I, J):
        raise DimensionMismatch(f"plan is {plan.x.shape}, instance is {(I, J)}")
    out = []

    for name in ("x", "z", "x_new"):
        arr = getattr(plan, name)
        for i, j in zip(*np.nonzero(arr < 0)):
            out.append(PlanViolation("domain", (name, int(i), int(j)),
                                     float(arr[i, j])))
    for j in np.flatnonzero((plan.y != 0) & (plan.y != 1)):
        out.append(PlanViolation("domain", ("y", int(j)), float(plan.y[j])))

    # (1g) x within its precomputed upper bound
    for i in range(I):
        for j in range(J):
            v = upper_bound_v(inst, i, j)
            if plan.x[i, j] > v:
                out.append(PlanViolation("upper_bound", (i, j),
                                         float(v - plan.x[i, j])))

    # (1b) capacity per resource and server; integer-exact when data is integral
    u = inst.u
    s = inst.s
    load = plan.x + plan.x_new
    for r in range(inst.num_resources):
        used = u[:, r] @ load                       # length J
        cap = s[:, r] * plan.y
        for j in np.flatnonzero(used > cap):
            out.append(PlanViolation("capacity", (r, int(j)),
                                     float(cap[j] - used[j])))

    # (1c) x - z <= n
    slack = inst.n + plan.z - plan.x
    for i, j in zip(*np.nonzero(slack < 0)):
        out.append(PlanViolation("migration", (int(i), int(j)),
                                 float(slack[i, j])))

    # (1d) / (1e) demand cover
    d = inst.d
    got = plan.x.sum(axis=1)
    for i in np.flatnonzero(got != d):
        out.append(PlanViolation("old_demand", (int(i),), float(got[i] - d[i])))
    got_new = plan.x_new.sum(axis=1)
    for i in np.flatnonzero(got_new != inst.d_new):
        out.append(PlanViolation("new_demand", (int(i),),
                                 float(got_new[i] - inst.d_new[i])))
    return out


def plan_cost(inst: Instance, plan: Plan, assignment_cost_mode: str = "plan") -> float:
    """Objective value of a plan under the same cost mode as build_mip."""
    if plan.x.shape != (inst.num_vm_types, inst.num_servers):
        raise DimensionMismatch("plan does not match instance dimensions")
    assign_base = plan.x if assignment_cost_mode == "plan" else inst.n
    if assignment_cost_mode not in ("plan", "current"):
        raise ValueError("assignment_cost_mode must be 'plan' or 'current'")
    return float((inst.c_assign * assign_base).sum()
                 + inst.c_run @ plan.y
                 + (inst.c_mig * plan.z).sum()
                 + (inst.c_new * plan.x_new).sum())
