"""Branch-and-bound MILP solver over the bounded-variable simplex.

Search layout: best-bound-first node selection with depth-first plunging
(each branching immediately descends into the ceil-side child, the sibling
goes to the heap).  Until the first incumbent exists the plunge backtracks
depth-first through the parked siblings instead of jumping to the global
best bound; on symmetric packing models a best-bound pop discards the
partial rounding built up by the dive and the search never reaches an
integral leaf.  Branching picks the most fractional variable, ties broken
by smallest index.  Node LPs are
warm-started with the dual simplex from whatever basis the core last held;
any warm-start trouble falls back to a fresh two-phase solve, so numerical
hiccups cost time, never correctness.

Incumbents are rounded to exact integers and re-checked by an independent
dense evaluator before being accepted.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import (
    LE, GE, EQ, LinearProgram, SimplexCore, NumericalBreakdown,
    AT_LOWER, AT_UPPER,
    OPTIMAL as LP_OPTIMAL, INFEASIBLE as LP_INFEASIBLE, UNBOUNDED as LP_UNBOUNDED,
)

# integrality codes
CONTINUOUS, INTEGER, BINARY = 0, 1, 2

# solve statuses
OPTIMAL = "optimal"
FEASIBLE_TIME_LIMIT = "feasible_time_limit"
INFEASIBLE = "infeasible"
NO_SOLUTION_TIME_LIMIT = "no_solution_time_limit"

INT_TOL = 1e-6


class ConflictingFix(ValueError):
    """The same variable was fixed to incompatible values."""


class EmptyBucket(ValueError):
    """A piercing cut needs at least one binary variable."""


@dataclass(frozen=True)
class MipProblem:
    """LinearProgram plus integrality flags, pinned values and appended rows."""

    base: LinearProgram
    integrality: np.ndarray
    fixed_values: dict = field(default_factory=dict)
    extra_constraints: tuple = ()

    def __post_init__(self):
        integ = np.asarray(self.integrality, dtype=np.int8)
        if integ.shape != (self.base.num_vars,):
            raise ValueError("integrality flags must cover every variable")
        integ = integ.copy()
        integ.setflags(write=False)
        object.__setattr__(self, "integrality", integ)
        object.__setattr__(self, "fixed_values", dict(self.fixed_values))
        extras = []
        for row, sense, rhs in self.extra_constraints:
            row = np.asarray(row, dtype=float)
            if row.shape != (self.base.num_vars,):
                raise ValueError("extra constraint row has wrong length")
            row = row.copy()
            row.setflags(write=False)
            extras.append((row, sense, float(rhs)))
        object.__setattr__(self, "extra_constraints", tuple(extras))

    @property
    def num_vars(self):
        return self.base.num_vars

    def is_discrete(self):
        return self.integrality != CONTINUOUS


@dataclass(frozen=True)
class SolveConfig:
    """Budget and determinism knobs for one branch-and-bound run."""

    time_limit: float = math.inf
    gap_tol: float = 0.0
    node_limit: int | None = None
    seed: int = 0  # determinism token; the search itself is deterministic

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be non-negative")


@dataclass(frozen=True)
class MipResult:
    status: str
    incumbent: np.ndarray | None
    objective: float | None
    best_bound: float
    nodes: int
    wall_time: float

    def __post_init__(self):
        if self.incumbent is not None:
            arr = np.array(self.incumbent)
            arr.setflags(write=False)
            object.__setattr__(self, "incumbent", arr)


# -- problem editing ---------------------------------------------------------


def apply_fixings(problem: MipProblem, zeros, ones) -> MipProblem:
    """Pin the listed variables to 0 / 1 via fixed_values (copy-on-write)."""
    zeros = set(zeros)
    ones = set(ones)
    clash = zeros & ones
    if clash:
        raise ConflictingFix(f"variables fixed to both 0 and 1: {sorted(clash)}")
    pins = dict(problem.fixed_values)
    for idx, val in [(j, 0.0) for j in zeros] + [(j, 1.0) for j in ones]:
        if not 0 <= idx < problem.num_vars:
            raise ValueError(f"variable index {idx} out of range")
        if idx in pins and pins[idx] != val:
            raise ConflictingFix(f"variable {idx} already pinned to {pins[idx]}")
        pins[idx] = val
    return MipProblem(problem.base, problem.integrality, pins, problem.extra_constraints)


def add_cutoff(problem: MipProblem, ub: float) -> MipProblem:
    """Append the row  objective-expression <= ub  (offset folded into the rhs)."""
    if not math.isfinite(ub):
        raise ValueError("cutoff bound must be finite")
    row = (problem.base.c.copy(), LE, ub - problem.base.offset)
    return MipProblem(problem.base, problem.integrality, problem.fixed_values,
                      problem.extra_constraints + (row,))


def add_piercing_cut(problem: MipProblem, bucket) -> MipProblem:
    """Append  sum of the bucket's binaries >= 1  (forces the bucket to participate)."""
    bucket = sorted(set(bucket))
    if not bucket:
        raise EmptyBucket("piercing cut needs a non-empty bucket")
    row = np.zeros(problem.num_vars)
    for j in bucket:
        if problem.integrality[j] != BINARY:
            raise ValueError(f"piercing cut variable {j} is not binary")
        row[j] = 1.0
    return MipProblem(problem.base, problem.integrality, problem.fixed_values,
                      problem.extra_constraints + ((row, GE, 1.0),))


def relaxation(problem: MipProblem) -> LinearProgram:
    """Continuous relaxation: base rows + extra rows, pins as equal bounds."""
    base = problem.base
    lb = base.lb.copy()
    ub = base.ub.copy()
    for j, val in problem.fixed_values.items():
        lb[j] = ub[j] = val
    if problem.extra_constraints:
        rows = np.vstack([base.A] + [r for r, _, _ in problem.extra_constraints]) \
            if base.num_rows else np.vstack([r for r, _, _ in problem.extra_constraints])
        senses = base.senses + tuple(s for _, s, _ in problem.extra_constraints)
        rhs = np.concatenate([base.b, [v for _, _, v in problem.extra_constraints]])
    else:
        rows, senses, rhs = base.A, base.senses, base.b
    return LinearProgram(base.c, rows, senses, rhs, lb, ub, base.offset)


def _validate(problem: MipProblem):
    base = problem.base
    binaries = problem.integrality == BINARY
    if np.any(base.lb[binaries] < -INT_TOL) or np.any(base.ub[binaries] > 1 + INT_TOL):
        raise ValueError("binary variables must have bounds within [0, 1]")
    for j, val in problem.fixed_values.items():
        if val < base.lb[j] - INT_TOL or val > base.ub[j] + INT_TOL:
            raise ValueError(f"pinned value {val} for variable {j} violates its bounds")
        if problem.integrality[j] != CONTINUOUS and abs(val - round(val)) > INT_TOL:
            raise ValueError(f"pinned value {val} for discrete variable {j} is fractional")


def evaluate_feasibility(problem: MipProblem, x, int_tol=INT_TOL) -> list:
    """Independent constraint evaluator (plain dot products, no solver state).

    Returns (kind, index, amount) tuples for bound, integrality, pin and row
    violations.  Used to vet every incumbent before it is accepted.
    """
    x = np.asarray(x, dtype=float)
    base = problem.base
    out = []
    lb = base.lb.copy()
    ub = base.ub.copy()
    for j, val in problem.fixed_values.items():
        lb[j] = ub[j] = val
    scale = np.maximum(1.0, np.abs(x))
    for j in np.flatnonzero(x < lb - 1e-6 * scale):
        out.append(("bound", int(j), float(lb[j] - x[j])))
    for j in np.flatnonzero(x > ub + 1e-6 * scale):
        out.append(("bound", int(j), float(x[j] - ub[j])))
    disc = np.flatnonzero(problem.is_discrete())
    frac = np.abs(x[disc] - np.round(x[disc]))
    for k in np.flatnonzero(frac > int_tol):
        out.append(("integrality", int(disc[k]), float(frac[k])))
    rows = [(base.A[i], base.senses[i], base.b[i]) for i in range(base.num_rows)]
    rows += list(problem.extra_constraints)
    for i, (row, sense, rhs) in enumerate(rows):
        val = float(row @ x)
        tol = 1e-6 + 1e-7 * max(abs(rhs), float(np.abs(row * x).sum()))
        diff = val - rhs
        if sense == LE and diff > tol:
            out.append(("row", i, diff))
        elif sense == GE and -diff > tol:
            out.append(("row", i, -diff))
        elif sense == EQ and abs(diff) > tol:
            out.append(("row", i, abs(diff)))
    return out


def mip_objective(problem: MipProblem, x) -> float:
    return float(problem.base.c @ np.asarray(x, dtype=float)) + problem.base.offset


# -- branch and bound ---------------------------------------------------------


class _Node:
    __slots__ = ("parent", "var", "side", "val", "bound", "seq", "extra", "snap")

    def __init__(self, parent, var, side, val, bound, seq, extra=None):
        self.parent = parent
        self.var = var
        self.side = side  # "lo" or "hi"
        self.val = val
        self.bound = bound
        self.seq = seq
        # reduced-cost tightenings inherited from the parent LP; shared
        # between siblings, valid for the whole subtree
        self.extra = extra
        # parent's optimal basis, set when this node is parked on the heap
        # so its solve can warm-start one bound change away
        self.snap = None


def _rc_tighten(rcost, vst, lbs, ubs, isdisc, allowed):
    """Domain clips implied by reduced costs and the incumbent gap."""
    movable = lbs < ubs
    out = []
    cand = np.flatnonzero(movable & (vst == AT_LOWER) & (rcost > 1e-9))
    if cand.size:
        cap = lbs[cand] + allowed / rcost[cand]
        cap = np.where(isdisc[cand], np.floor(cap + 1e-9), cap)
        margin = np.where(isdisc[cand], 0.5, 1e-7 * np.maximum(1.0, np.abs(ubs[cand])))
        keep = cap < ubs[cand] - margin
        out.extend(zip(cand[keep].tolist(), itertools.repeat("hi"), cap[keep].tolist()))
    cand = np.flatnonzero(movable & (vst == AT_UPPER) & (rcost < -1e-9))
    if cand.size:
        cap = ubs[cand] - allowed / (-rcost[cand])
        cap = np.where(isdisc[cand], np.ceil(cap - 1e-9), cap)
        margin = np.where(isdisc[cand], 0.5, 1e-7 * np.maximum(1.0, np.abs(lbs[cand])))
        keep = cap > lbs[cand] + margin
        out.extend(zip(cand[keep].tolist(), itertools.repeat("lo"), cap[keep].tolist()))
    return out or None


def _node_bounds(node, root_lb, root_ub):
    lb = root_lb.copy()
    ub = root_ub.copy()
    chain = []
    cur = node
    while cur is not None and cur.var is not None:
        chain.append(cur)
        cur = cur.parent
    for nd in reversed(chain):  # root-most tightening first
        if nd.extra is not None:
            for v, side, val in nd.extra:
                if side == "lo":
                    lb[v] = max(lb[v], val)
                else:
                    ub[v] = min(ub[v], val)
        if nd.side == "lo":
            lb[nd.var] = max(lb[nd.var], nd.val)
        else:
            ub[nd.var] = min(ub[nd.var], nd.val)
    return lb, ub


def solve_mip(problem: MipProblem, config: SolveConfig = SolveConfig(),
              on_improve=None) -> MipResult:
    """Solve to the configured gap; deterministic for a fixed problem/config.

    on_improve, when given, is called as on_improve(incumbent_objective,
    best_bound, nodes) after every accepted incumbent (used by invariant
    tests; has no effect on the search).
    """
    t0 = time.perf_counter()
    _validate(problem)
    lp0 = relaxation(problem)
    core = SimplexCore(lp0.c, lp0.A, lp0.senses, lp0.b, lp0.lb, lp0.ub)
    offset = lp0.offset

    status0 = core.fresh_solve()
    nodes = 1
    if status0 == LP_INFEASIBLE:
        return MipResult(INFEASIBLE, None, None, math.inf, nodes,
                         time.perf_counter() - t0)
    if status0 == LP_UNBOUNDED:
        raise ValueError("relaxation is unbounded; MILP statuses cannot express this")

    isdisc = problem.is_discrete()
    disc = np.flatnonzero(isdisc)
    c = lp0.c
    inc_x = None
    inc_obj = math.inf
    seq = 0
    heap = []  # (bound, seq, node)
    dive = []  # LIFO siblings kept for backtracking until a first incumbent exists
    pending = None  # plunge slot

    def prune_eps():
        if math.isinf(inc_obj):
            return 0.0
        s = max(1.0, abs(inc_obj))
        return max(1e-9 * s, config.gap_tol * s)

    def open_bound():
        b = heap[0][0] if heap else math.inf
        if dive:
            b = min(b, min(nd.bound for nd in dive))
        if pending is not None:
            b = min(b, pending.bound)
        return b

    root = _Node(None, None, None, None, -math.inf, seq)
    seq += 1
    pending = root
    first_solve = True
    timed_out = False

    while pending is not None or heap or dive:
        if time.perf_counter() - t0 > config.time_limit:
            timed_out = True
            break
        if config.node_limit is not None and nodes >= config.node_limit and not first_solve:
            timed_out = True
            break
        if pending is not None:
            node = pending
            pending = None
        elif dive:
            # no incumbent yet: backtrack depth-first so partial roundings
            # accumulate instead of restarting the dive from a shallow node
            node = dive.pop()
        else:
            node = heapq.heappop(heap)[2]
        if node.bound >= inc_obj - prune_eps():
            continue

        if first_solve:
            lp_status = status0  # root already solved
            first_solve = False
            lbs, ubs = lp0.lb, lp0.ub
        else:
            lbs, ubs = _node_bounds(node, lp0.lb, lp0.ub)
            core.set_bounds(lbs, ubs)
            if node.snap is not None:
                # a plunge child rides the live core (already the parent's
                # basis); heap pops restore their own parent's basis
                core.load_basis(node.snap)
            lp_status = core.dual_reopt()
            if lp_status == SimplexCore.NEED_FRESH:
                lp_status = core.fresh_solve()
            nodes += 1
        if lp_status == LP_INFEASIBLE:
            continue
        if lp_status == LP_UNBOUNDED:
            raise NumericalBreakdown("node relaxation reported unbounded")

        x, obj = core.primal_solution()
        obj += offset
        bound = max(obj, node.bound)
        if bound >= inc_obj - prune_eps():
            continue

        frac = np.abs(x[disc] - np.round(x[disc])) if disc.size else np.zeros(0)
        if disc.size == 0 or float(frac.max()) <= INT_TOL:
            xr = x.copy()
            xr[disc] = np.round(xr[disc])
            if not evaluate_feasibility(problem, xr):
                cand = float(c @ xr) + offset
                if cand < inc_obj:
                    inc_obj = cand
                    inc_x = xr
                    if dive:
                        for nd in dive:
                            heapq.heappush(heap, (nd.bound, nd.seq, nd))
                        dive.clear()
                    if on_improve is not None:
                        on_improve(inc_obj, min(open_bound(), inc_obj), nodes)
            continue

        tight = None
        if inc_obj < math.inf:
            # reduced-cost bound tightening: a unit move of a nonbasic
            # variable away from its bound costs at least |r|, so moves
            # that would push the LP past the incumbent cannot be part of
            # any improving solution anywhere in this subtree
            rcost, vst = core.reduced_costs()
            allowed = (inc_obj - prune_eps()) - obj
            tight = _rc_tighten(rcost, vst, lbs, ubs, isdisc, allowed)

        j = int(disc[int(np.argmax(frac))])
        xj = float(x[j])
        lo_child = _Node(node, j, "hi", math.floor(xj), bound, seq, tight)
        seq += 1
        hi_child = _Node(node, j, "lo", math.ceil(xj), bound, seq, tight)
        seq += 1
        # plunge the ceil side first: on packing models an up-branch that does
        # not fit fails locally (one infeasible node, the sibling flip
        # recovers), while down-branches starve aggregate demand rows many
        # levels deeper, where backtracking out of the doomed subtree is
        # exponential
        pending, sibling = hi_child, lo_child
        sibling.snap = core.save_basis()
        if math.isinf(inc_obj):
            dive.append(sibling)
        else:
            heapq.heappush(heap, (sibling.bound, sibling.seq, sibling))

        # optimality gap check against the open-node frontier
        if inc_obj < math.inf:
            frontier = open_bound()
            if inc_obj - frontier <= config.gap_tol * max(1.0, abs(inc_obj)):
                gap_bound = frontier
                pending = None
                heap.clear()
                dive.clear()
                break
    else:
        gap_bound = None

    wall = time.perf_counter() - t0
    if timed_out:
        bb = min(open_bound(), inc_obj)
        if inc_x is None:
            return MipResult(NO_SOLUTION_TIME_LIMIT, None, None, bb, nodes, wall)
        return MipResult(FEASIBLE_TIME_LIMIT, inc_x, inc_obj, bb, nodes, wall)
    if inc_x is None:
        return MipResult(INFEASIBLE, None, None, math.inf, nodes, wall)
    if config.gap_tol == 0:
        bb = inc_obj
    elif gap_bound is not None:
        bb = min(gap_bound, inc_obj)
    else:
        bb = min(open_bound(), inc_obj)
    return MipResult(OPTIMAL, inc_x, inc_obj, bb, nodes, wall)
