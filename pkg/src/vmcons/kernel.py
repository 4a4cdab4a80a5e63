"""Kernel search heuristics for consolidation planning.

The standard variant (``ksf``) works the classic bucket scheme: solve the
problem restricted to a kernel of promising servers, then sweep buckets of
the remaining ones, carrying the best incumbent as a cutoff. The fixing
variants shrink the search space first using the root LP's reduced costs:
``ksfv`` permanently pins binary (server) variables whose reduced cost
clears a threshold, ``ksfvg`` additionally pins integer assignment
variables the same way.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import OPTIMAL as LP_OPTIMAL
from .lp import solve_lp
from . import mip
from .mip import (
    SolveConfig, add_cutoff, add_piercing_cut, apply_fixings, solve_mip,
)
from .model import VarMap, build_mip, extract_plan

VARIANTS = ("ksf", "ksfv", "ksfvg")

# restricted solves get at least this many seconds even when the outer
# budget is nearly spent, so a final bucket is not solved with a zero limit
_MIN_SLICE = 0.05

INT_TOL = 1e-6


class StillInfeasible(RuntimeError):
    """Recovery expansion exhausted every bucket without finding feasibility."""


@dataclass
class KsParams:
    t_max: float
    n_bar: int | None = None          # max buckets analyzed; None = all
    epsilon: float = 1e-4             # reduced-cost fixing threshold
    omega: float = 1.0                # recovery expansion factor
    kernel_size_rule: int | None = None   # None = positive-LP-value rule
    bucket_size_rule: int | None = None   # None = kernel size
    variant: str = "ksfvg"

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.n_bar is not None and self.n_bar < 0:
            raise ValueError("n_bar must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.kernel_size_rule is not None and self.kernel_size_rule < 1:
            raise ValueError("kernel_size_rule override must be at least 1")
        if self.bucket_size_rule is not None and self.bucket_size_rule < 1:
            raise ValueError("bucket_size_rule override must be at least 1")


@dataclass
class FixingSets:
    """Permanent fixings derived from root-LP reduced costs.

    Maps variable index -> the reduced cost that justified the fixing.
    """
    zeros_binary: dict = field(default_factory=dict)
    ones_binary: dict = field(default_factory=dict)
    zeros_integer: dict = field(default_factory=dict)

    def counts(self):
        return {
            "zeros_binary": len(self.zeros_binary),
            "ones_binary": len(self.ones_binary),
            "zeros_integer": len(self.zeros_integer),
        }

    def is_empty(self):
        return not (self.zeros_binary or self.ones_binary or self.zeros_integer)


@dataclass
class KernelState:
    kernel: list
    buckets: list
    working_set: set
    ub_min: float = math.inf
    incumbent: object = None          # raw solver vector of the best plan
    bucket_cursor: int = 0


@dataclass
class TraceRecord:
    phase: str                        # "kernel" | "recovery" | "bucket" | "fallback"
    bucket_index: int | None
    working_size: int
    status: str
    objective: float | None
    wall_time: float
    nodes: int


@dataclass
class KsResult:
    status: str                       # "solved" | "no_solution"
    ub_min: float
    plan: object
    trace: list
    fixing_stats: dict
    wall_time: float


def fix_variables(lp, inst, eps: float, variant: str) -> FixingSets:
    """Apply reduced-cost fixing strategies to an optimal root LP."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    out = FixingSets()
    if variant == "ksf":
        return out
    vmap = VarMap(inst.num_vm_types, inst.num_servers)
    r = lp.reduced_costs
    for j in range(vmap.y_slice.start, vmap.y_slice.stop):
        if r[j] >= eps:
            out.zeros_binary[j] = float(r[j])
        elif r[j] <= -eps:
            out.ones_binary[j] = float(r[j])
    if variant == "ksfvg":
        for sl in (vmap.x_slice, vmap.z_slice, vmap.x_new_slice):
            for j in range(sl.start, sl.stop):
                if r[j] >= eps:
                    out.zeros_integer[j] = float(r[j])
    return out


def sort_binaries(lp, unfixed) -> list:
    """Order binaries: LP value descending, |reduced cost| ascending, index."""
    idx = sorted(unfixed)
    return sorted(idx, key=lambda j: (-lp.x[j], abs(lp.reduced_costs[j]), j))


def _kernel_size(values, params: KsParams) -> int:
    total = len(values)
    if params.kernel_size_rule is not None:
        return min(params.kernel_size_rule, total)
    positive = int(np.sum(np.asarray(values) > INT_TOL))
    return max(min(10, total), min(positive, total))


def build_kernel_and_buckets(sorted_vars, params: KsParams, lp_values=None) -> KernelState:
    """Split the sorted binaries into the kernel and a bucket sequence."""
    if lp_values is None:
        lp_values = [0.0] * len(sorted_vars)
    size = _kernel_size(lp_values, params) if sorted_vars else 0
    kernel = list(sorted_vars[:size])
    rest = list(sorted_vars[size:])
    bsize = params.bucket_size_rule if params.bucket_size_rule is not None else max(size, 1)
    buckets = [rest[i:i + bsize] for i in range(0, len(rest), bsize)]
    return KernelState(kernel=kernel, buckets=buckets, working_set=set(kernel))


def make_restricted(inst, state: KernelState, fixings: FixingSets,
                    bucket=None, ub=None, assignment_cost_mode="plan"):
    """Model with out-of-working-set servers off, plus the optional cuts."""
    prob, vmap = build_mip(inst, assignment_cost_mode=assignment_cost_mode)
    free = set(state.working_set)
    if bucket:
        free |= set(bucket)
    ones = set(fixings.ones_binary)
    binaries = set(range(vmap.y_slice.start, vmap.y_slice.stop))
    zeros = (binaries - free - ones) | set(fixings.zeros_integer)
    prob = apply_fixings(prob, zeros, ones)
    if ub is not None:
        prob = add_cutoff(prob, ub)
    if bucket:
        prob = add_piercing_cut(prob, set(bucket))
    return prob


def _flatten(buckets):
    return [j for b in buckets for j in b]


def expand_kernel_until_feasible(inst, state: KernelState, fixings: FixingSets,
                                 params: KsParams, t0=None, trace=None,
                                 assignment_cost_mode="plan") -> KernelState:
    """Grow the working set bucket-wise until the restricted problem admits a plan.

    Mutates nothing; returns a new state with the redefined kernel and
    rebuilt buckets. Raises StillInfeasible when every bucket is consumed
    without reaching feasibility.
    """
    if t0 is None:
        t0 = time.perf_counter()
    step = max(1, math.ceil(len(state.kernel) * params.omega))
    pool = _flatten(state.buckets)
    working = list(state.kernel)
    best_vec, best_obj = state.incumbent, state.ub_min
    while pool:
        take, pool = pool[:step], pool[step:]
        working.extend(take)
        tmp = KernelState(kernel=working, buckets=[], working_set=set(working))
        prob = make_restricted(inst, tmp, fixings,
                               assignment_cost_mode=assignment_cost_mode)
        budget = _slice_budget(params.t_max, t0, _bucket_count(pool, len(working), params))
        res = solve_mip(prob, SolveConfig(time_limit=budget, gap_tol=0.0))
        if trace is not None:
            trace.append(TraceRecord("recovery", None, len(working), res.status,
                                     res.objective, res.wall_time, res.nodes))
        if res.incumbent is not None:
            if res.objective < best_obj:
                best_obj, best_vec = res.objective, res.incumbent
            bsize = params.bucket_size_rule if params.bucket_size_rule is not None else max(len(working), 1)
            buckets = [pool[i:i + bsize] for i in range(0, len(pool), bsize)]
            return KernelState(kernel=working, buckets=buckets,
                               working_set=set(working), ub_min=best_obj,
                               incumbent=best_vec)
    raise StillInfeasible("no feasible restricted problem after full expansion")


def _bucket_count(pool, ksize, params: KsParams):
    bsize = params.bucket_size_rule if params.bucket_size_rule is not None else max(ksize, 1)
    n = math.ceil(len(pool) / bsize) if pool else 0
    if params.n_bar is not None:
        n = min(n, params.n_bar)
    return n


def _slice_budget(t_max, t0, buckets_left):
    left = t_max - (time.perf_counter() - t0)
    return max(_MIN_SLICE, left / (buckets_left + 1))


def _out_of_time(t_max, t0):
    return time.perf_counter() - t0 >= t_max


def run_kernel_search(inst, params: KsParams, assignment_cost_mode="plan") -> KsResult:
    """End-to-end kernel search: relax, fix, bucket sweep, best plan out."""
    t0 = time.perf_counter()
    trace = []
    prob0, vmap = build_mip(inst, assignment_cost_mode=assignment_cost_mode)
    lp = solve_lp(mip.relaxation(prob0))
    if lp.status != LP_OPTIMAL:
        # nothing to relax against; fall through to one exact attempt
        res = solve_mip(prob0, SolveConfig(time_limit=max(_MIN_SLICE, params.t_max),
                                           gap_tol=0.0))
        trace.append(TraceRecord("fallback", None, inst.num_servers, res.status,
                                 res.objective, res.wall_time, res.nodes))
        return _finish(res.incumbent is not None,
                       res.objective if res.incumbent is not None else math.inf,
                       res.incumbent, vmap, trace, FixingSets(), t0)

    fixings = fix_variables(lp, inst, params.epsilon, params.variant)
    binaries = set(range(vmap.y_slice.start, vmap.y_slice.stop))

    # fallback ladder: drop strategy c, then all fixings, then solve unrestricted
    attempts = [fixings]
    if fixings.zeros_integer:
        attempts.append(FixingSets(dict(fixings.zeros_binary), dict(fixings.ones_binary), {}))
    if fixings.zeros_binary or fixings.ones_binary:
        attempts.append(FixingSets())

    state = None
    for fx in attempts:
        unfixed = binaries - set(fx.zeros_binary) - set(fx.ones_binary)
        order = sort_binaries(lp, unfixed)
        cand = build_kernel_and_buckets(order, params, [lp.x[j] for j in order])
        prob = make_restricted(inst, cand, fx, assignment_cost_mode=assignment_cost_mode)
        budget = _slice_budget(params.t_max, t0,
                               _bucket_count(_flatten(cand.buckets), len(cand.kernel), params))
        res = solve_mip(prob, SolveConfig(time_limit=budget, gap_tol=0.0))
        trace.append(TraceRecord("kernel", None, len(cand.kernel), res.status,
                                 res.objective, res.wall_time, res.nodes))
        if res.incumbent is not None:
            cand.ub_min, cand.incumbent = res.objective, res.incumbent
            state, fixings = cand, fx
            break
        try:
            state = expand_kernel_until_feasible(inst, cand, fx, params, t0=t0,
                                                 trace=trace,
                                                 assignment_cost_mode=assignment_cost_mode)
            fixings = fx
            break
        except StillInfeasible:
            if _out_of_time(params.t_max, t0):
                break
            continue

    if state is None:
        # every restriction failed; solve the full problem with whatever
        # remains, floored at half the budget so a kernel solve that ate
        # everything cannot starve the safety net (one-solve overrun)
        left = params.t_max - (time.perf_counter() - t0)
        budget = max(_MIN_SLICE, left, 0.5 * params.t_max)
        res = solve_mip(prob0, SolveConfig(time_limit=budget, gap_tol=0.0))
        trace.append(TraceRecord("fallback", None, inst.num_servers, res.status,
                                 res.objective, res.wall_time, res.nodes))
        return _finish(res.incumbent is not None,
                       res.objective if res.incumbent is not None else math.inf,
                       res.incumbent, vmap, trace, fixings, t0)

    n_total = len(state.buckets)
    n_analyzed = n_total if params.n_bar is None else min(params.n_bar, n_total)
    for i in range(n_analyzed):
        if _out_of_time(params.t_max, t0):
            break
        bucket = state.buckets[i]
        state.bucket_cursor = i + 1
        ub = state.ub_min if math.isfinite(state.ub_min) else None
        prob = make_restricted(inst, state, fixings, bucket=bucket, ub=ub,
                               assignment_cost_mode=assignment_cost_mode)
        budget = _slice_budget(params.t_max, t0, n_analyzed - i - 1)
        res = solve_mip(prob, SolveConfig(time_limit=budget, gap_tol=0.0))
        trace.append(TraceRecord("bucket", i, len(state.working_set) + len(bucket),
                                 res.status, res.objective, res.wall_time, res.nodes))
        if res.incumbent is not None and res.objective < state.ub_min:
            state.ub_min = res.objective
            state.incumbent = res.incumbent
        state.working_set |= set(bucket)

    found = state.incumbent is not None
    return _finish(found, state.ub_min, state.incumbent, vmap, trace, fixings, t0)


def _finish(found, ub_min, vec, vmap, trace, fixings, t0):
    plan = extract_plan(vmap, vec) if found and vec is not None else None
    return KsResult(
        status="solved" if plan is not None else "no_solution",
        ub_min=float(ub_min) if plan is not None else math.inf,
        plan=plan,
        trace=trace,
        fixing_stats=fixings.counts(),
        wall_time=0.0 if t0 is None else time.perf_counter() - t0,
    )
