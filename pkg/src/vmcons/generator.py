"""Random consolidation instances: catalog, load-targeted allocation, costs.

Generation walks each selected server, adding one uniformly drawn VM at a
time (never overfilling) until the busiest-resource share sigma exceeds beta,
then grows the new-VM demand the same way until the aggregate share tau
exceeds gamma.  Costs come from a linear power model: idle draw plus a slope
proportional to CPU utilization.

Randomness is numpy's Philox, split into one child stream per server plus one
for the selection mask and one for new-VM demand, so instances are
reproducible across machines for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance, ServerSpec, VmSpec

RESOURCES = ("cpu", "ram", "bandwidth")

# (cpu cores, ram GB, bandwidth Mbps)
VM_TYPES = (
    (1, 1, 10),
    (2, 4, 100),
    (4, 8, 300),
    (6, 12, 1000),
    (8, 16, 1200),
)

# (cpu cores, ram GB, bandwidth Mbps, max power W)
SERVER_TYPES = (
    (4, 8, 1000, 180),
    (8, 16, 1000, 200),
    (10, 16, 2000, 250),
    (12, 32, 2000, 250),
    (14, 32, 2000, 280),
    (14, 32, 2000, 300),
    (16, 32, 4000, 300),
    (16, 64, 4000, 350),
    (18, 64, 4000, 380),
    (18, 64, 4000, 410),
)

RNG_NAME = "philox"
_MAX_ATTEMPTS = 10


class GenerationStalled(RuntimeError):
    """Repeated draws never produced a packable instance."""


def catalog():
    """The fixed five VM types and ten server types."""
    vms = [VmSpec(np.array(row, dtype=float)) for row in VM_TYPES]
    servers = [ServerSpec(np.array(row[:3], dtype=float), float(row[3]))
               for row in SERVER_TYPES]
    return vms, servers


@dataclass(frozen=True)
class GenParams:
    num_servers: int
    beta: float
    alpha: float = 0.5
    gamma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_servers < 1:
            raise ValueError("num_servers must be at least 1")
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")


@dataclass(frozen=True)
class PowerModel:
    """Linear draw: P = P_idle + (P_max - P_idle) * cpu_utilization."""

    p_idle_fraction: float = 0.6

    def __post_init__(self):
        if not 0 <= self.p_idle_fraction <= 1:
            raise ValueError("p_idle_fraction must lie in [0, 1]")

    def idle_power(self, p_max):
        return self.p_idle_fraction * p_max

    def dynamic_power(self, p_max):
        return (1.0 - self.p_idle_fraction) * p_max


def sigma_k(inst: Instance, k) -> float:
    """Busiest-resource share of server k under the current allocation."""
    usage = inst.u.T @ inst.n[:, k]          # per resource
    cap = inst.servers[k].capacity
    with np.errstate(divide="ignore", invalid="ignore"):
        shares = np.where(usage > 0, usage / cap, 0.0)
    return float(np.max(shares))


def tau(inst: Instance) -> float:
    """Busiest-resource share of the whole fleet taken by the new VMs."""
    usage = inst.u.T @ inst.d_new
    cap = inst.s.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        shares = np.where(usage > 0, usage / cap, 0.0)
    return float(np.max(shares))


def derive_costs(vm_types, server_types, pm: PowerModel = PowerModel(),
                 new_cost_scale: float = 1.0, cpu_index: int = 0):
    """Cost coefficients from the power model.

    c_run_j is the idle draw of server j.  c_assign[i,j] is the dynamic draw
    attributed to one VM of type i via its CPU share.  Migration cost equals
    assignment cost; so does new-placement cost, times new_cost_scale.
    Returns (c_run, c_assign, c_mig, c_new).
    """
    p_max = np.array([sv.max_power for sv in server_types])
    u_cpu = np.array([vm.demand[cpu_index] for vm in vm_types])
    s_cpu = np.array([sv.capacity[cpu_index] for sv in server_types])
    c_run = pm.idle_power(p_max)
    c_assign = pm.dynamic_power(p_max)[None, :] * u_cpu[:, None] / s_cpu[None, :]
    c_mig = c_assign.copy()
    c_new = new_cost_scale * c_assign
    return c_run, c_assign, c_mig, c_new


def _server_counts(num_servers, num_types):
    """Equal share per type; any remainder goes to the lowest-index types."""
    base, extra = divmod(num_servers, num_types)
    return [base + (1 if t < extra else 0) for t in range(num_types)]


def _first_fit(items, residual, u):
    """Greedy placement of VM type indices into per-server residual capacity."""
    for i in items:
        need = u[i]
        placed = False
        for k in range(residual.shape[0]):
            if np.all(need <= residual[k]):
                residual[k] -= need
                placed = True
                break
        if not placed:
            return False
    return True


def _packable(u, s, n, d_new):
    """Constructive feasibility: some consolidation exists.

    Aggregate capacity alone can overstate what fits, so we also demand a
    first-fit-decreasing packing to succeed: either the new VMs fit in the
    residual space left by the current allocation, or a full repack of every
    VM into empty servers works.  Success of either is a certificate.
    """
    total_use = u.T @ (n.sum(axis=1) + d_new)
    if np.any(total_use > s.sum(axis=0)):
        return False
    order = sorted(range(u.shape[0]),
                   key=lambda i: (-float(u[i].max()), i))
    new_items = [i for i in order for _ in range(int(d_new[i]))]
    residual = s - (n.T @ u)
    if _first_fit(new_items, residual.copy(), u):
        return True
    all_items = [i for i in order
                 for _ in range(int(n[i].sum() + d_new[i]))]
    return _first_fit(all_items, s.astype(float).copy(), u)


def generate_with_meta(params: GenParams, vm_types=None, server_types=None,
                       power_model: PowerModel = PowerModel(),
                       new_cost_scale: float = 1.0):
    """generate_instance plus a reproducibility header dict."""
    if vm_types is None or server_types is None:
        cat_vms, cat_servers = catalog()
        vm_types = cat_vms if vm_types is None else list(vm_types)
        server_types = cat_servers if server_types is None else list(server_types)
    else:
        vm_types = list(vm_types)
        server_types = list(server_types)
    R = vm_types[0].demand.shape[0]
    names = RESOURCES if R == len(RESOURCES) else tuple(f"r{k}" for k in range(R))

    counts = _server_counts(params.num_servers, len(server_types))
    servers = [server_types[t] for t in range(len(server_types))
               for _ in range(counts[t])]
    u = np.stack([vm.demand for vm in vm_types])          # I x R
    s = np.stack([sv.capacity for sv in servers])         # K x R
    I, K = len(vm_types), len(servers)

    # a type that fits no server can never be demanded
    placeable = [i for i in range(I)
                 if any(np.all(u[i] <= s[k]) for k in range(K))]
    if not placeable:
        raise GenerationStalled("no VM type fits any server")

    for attempt in range(_MAX_ATTEMPTS):
        streams = np.random.SeedSequence([params.seed, attempt]).spawn(K + 2)
        rng_pick = np.random.Generator(np.random.Philox(streams[0]))
        chosen = rng_pick.random(K) < params.alpha

        n = np.zeros((I, K), dtype=np.int64)
        for k in range(K):
            if not chosen[k]:
                continue
            rng_k = np.random.Generator(np.random.Philox(streams[1 + k]))
            used = np.zeros_like(s[k])
            while True:
                shares = np.where(used > 0, used / s[k], 0.0)
                if float(shares.max()) > params.beta:
                    break
                fits = [i for i in range(I) if np.all(used + u[i] <= s[k])]
                if not fits:
                    break
                i = fits[int(rng_k.integers(len(fits)))]
                n[i, k] += 1
                used += u[i]

        rng_new = np.random.Generator(np.random.Philox(streams[K + 1]))
        d_new = np.zeros(I, dtype=np.int64)
        total_cap = s.sum(axis=0)
        new_use = np.zeros(R)
        while True:
            shares = np.where(new_use > 0, new_use / total_cap, 0.0)
            if float(shares.max()) > params.gamma:
                break
            i = placeable[int(rng_new.integers(len(placeable)))]
            d_new[i] += 1
            new_use += u[i]

        if not _packable(u, s, n, d_new):
            continue
        c_run, c_assign, c_mig, c_new = derive_costs(
            vm_types, servers, power_model, new_cost_scale)
        inst = Instance(resources=names, vm_types=tuple(vm_types),
                        servers=tuple(servers), n=n, d_new=d_new,
                        c_run=c_run, c_assign=c_assign,
                        c_mig=c_mig, c_new=c_new)
        meta = {
            "format_version": 1,
            "params": {"num_servers": params.num_servers, "alpha": params.alpha,
                       "beta": params.beta, "gamma": params.gamma,
                       "seed": params.seed},
            "rng": {"name": RNG_NAME, "numpy": np.__version__,
                    "scheme": "seedseq [seed, attempt] -> spawn(num_servers + 2)"},
            "attempt": attempt,
        }
        return inst, meta
    raise GenerationStalled(
        f"no packable instance after {_MAX_ATTEMPTS} attempts")


def generate_instance(params: GenParams, vm_types=None, server_types=None,
                      power_model: PowerModel = PowerModel(),
                      new_cost_scale: float = 1.0) -> Instance:
    """Draw one reproducible instance; see the module docstring for the scheme."""
    inst, _ = generate_with_meta(params, vm_types, server_types,
                                 power_model, new_cost_scale)
    return inst
