"""Independent brute-force oracles used to pin solver results.

Nothing in here calls the simplex or the branch-and-bound code.  The LP
oracle enumerates vertex candidates from every n-subset of tight hyperplanes;
the MIP oracle enumerates all integer points (vectorized for pure-integer
problems, falling back to the LP oracle for a continuous remainder).
"""

import itertools
import math

import numpy as np

INF = math.inf


def _stack_planes(c, A, senses, b, lb, ub):
    """All candidate tight hyperplanes (rows and finite bounds) as (normal, rhs)."""
    n = len(c)
    normals = []
    rhs = []
    for i in range(A.shape[0]):
        normals.append(A[i])
        rhs.append(b[i])
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lb[j]):
            normals.append(e.copy())
            rhs.append(lb[j])
        if np.isfinite(ub[j]):
            normals.append(e.copy())
            rhs.append(ub[j])
    return np.array(normals), np.array(rhs)


def _feasible_mask(points, A, senses, b, lb, ub, tol=1e-7):
    ok = np.ones(len(points), dtype=bool)
    if A.shape[0]:
        vals = points @ A.T
        for i, s in enumerate(senses):
            scale = tol * max(1.0, abs(b[i]))
            if s == "<=":
                ok &= vals[:, i] <= b[i] + scale
            elif s == ">=":
                ok &= vals[:, i] >= b[i] - scale
            else:
                ok &= np.abs(vals[:, i] - b[i]) <= scale
    ok &= np.all(points >= lb - tol, axis=1)
    ok &= np.all(points <= ub + tol, axis=1)
    return ok


def lp_vertex_oracle(c, A, senses, b, lb, ub, offset=0.0):
    """Minimize over all vertex candidates.  Returns (status, objective, x).

    Only valid when the feasible region is a polytope (all variables live in
    finite boxes after the rows are applied); keep it at ten variables or
    fewer.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    n = len(c)
    if n > 10:
        raise ValueError("vertex oracle limited to 10 variables")
    normals, rhs = _stack_planes(c, A, senses, b, lb, ub)
    total = len(normals)
    if total < n:
        raise ValueError("region cannot be bounded: too few planes")

    combos = np.array(list(itertools.combinations(range(total), n)))
    mats = normals[combos]                     # (k, n, n)
    dets = np.abs(np.linalg.det(mats))
    good = dets > 1e-9
    mats = mats[good]
    rs = rhs[combos[good]]
    if len(mats) == 0:
        return "infeasible", None, None
    pts = np.linalg.solve(mats, rs[..., None])[..., 0]
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    mask = _feasible_mask(pts, A, senses, b, lb, ub)
    pts = pts[mask]
    if len(pts) == 0:
        return "infeasible", None, None
    objs = pts @ c
    k = int(np.argmin(objs))
    return "optimal", float(objs[k]) + offset, pts[k]


def _integer_grid(los, his):
    """Cartesian product of ranges [lo, hi] as an array of rows."""
    axes = [np.arange(lo, hi + 1) for lo, hi in zip(los, his)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(float)


def brute_force_mip(c, A, senses, b, lb, ub, is_int, offset=0.0, feas_tol=1e-7):
    """Enumerate all integer points; LP oracle over any continuous remainder.

    is_int: boolean mask of discrete variables.  Discrete bounds must be
    finite.  Returns (status, objective, x).
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    is_int = np.asarray(is_int, dtype=bool)
    di = np.flatnonzero(is_int)
    ci = np.flatnonzero(~is_int)
    if np.any(~np.isfinite(lb[di])) or np.any(~np.isfinite(ub[di])):
        raise ValueError("discrete variables need finite bounds for enumeration")
    los = np.ceil(lb[di] - 1e-9).astype(int)
    his = np.floor(ub[di] + 1e-9).astype(int)
    if np.any(his < los):
        return "infeasible", None, None

    points = _integer_grid(los, his)
    if ci.size == 0:
        mask = _feasible_mask(points, A, senses, b, lb, ub, tol=feas_tol)
        points = points[mask]
        if len(points) == 0:
            return "infeasible", None, None
        objs = points @ c
        k = int(np.argmin(objs))
        return "optimal", float(objs[k]) + offset, points[k]

    # mixed case: substitute each integer assignment, solve the continuous rest
    best = (None, math.inf, None)
    A_int = A[:, di]
    A_cont = A[:, ci]
    for pt in points:
        resid = b - A_int @ pt
        status, obj, xc = lp_vertex_oracle(
            c[ci], A_cont, senses, resid, lb[ci], ub[ci], offset=0.0)
        if status != "optimal":
            continue
        total = float(c[di] @ pt) + obj
        if total < best[1]:
            x = np.empty(len(c))
            x[di] = pt
            x[ci] = xc
            best = ("optimal", total, x)
    if best[0] is None:
        return "infeasible", None, None
    return best[0], best[1] + offset, best[2]


def brute_force_binary(c, A, senses, b, offset=0.0):
    """All-binary special case, fully vectorized (up to ~22 variables)."""
    n = len(c)
    pts = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(float)
    lb = np.zeros(n)
    ub = np.ones(n)
    mask = _feasible_mask(pts, np.asarray(A, dtype=float).reshape(-1, n),
                          senses, np.asarray(b, dtype=float), lb, ub)
    pts = pts[mask]
    if len(pts) == 0:
        return "infeasible", None, None
    objs = pts @ np.asarray(c, dtype=float)
    k = int(np.argmin(objs))
    return "optimal", float(objs[k]) + offset, pts[k]


def _bounded_compositions(total, caps):
    """All non-negative integer tuples summing to `total` with per-slot caps."""
    if len(caps) == 1:
        return [(total,)] if total <= caps[0] else []
    out = []
    for first in range(min(total, caps[0]) + 1):
        for rest in _bounded_compositions(total - first, caps[1:]):
            out.append((first,) + rest)
    return out


def vmcp_brute_force(inst, assignment_cost_mode="plan"):
    """Enumerate every (x, x_new) placement of a tiny consolidation instance.

    Independent of the MILP encoding: y is derived (a server is on iff it
    carries load), migrations are derived as z = max(0, x - n).  Both are
    optimal because running and migration costs are non-negative.
    Returns (status, objective, (x, y, z, x_new)).
    """
    import itertools

    u = inst.u          # I x R
    s = inst.s          # J x R
    n = inst.n
    I, J = n.shape
    d = n.sum(axis=1)

    def fit_cap(i, j):
        caps = [int(s[j, r] // u[i, r]) for r in range(u.shape[1]) if u[i, r] > 0]
        return min(caps) if caps else int(max(d[i], inst.d_new[i]))

    x_rows = [_bounded_compositions(int(d[i]),
                                    [min(int(d[i]), fit_cap(i, j)) for j in range(J)])
              for i in range(I)]
    xn_rows = [_bounded_compositions(int(inst.d_new[i]),
                                     [min(int(inst.d_new[i]), fit_cap(i, j)) for j in range(J)])
               for i in range(I)]
    if any(len(r) == 0 for r in x_rows + xn_rows):
        return "infeasible", None, None

    best_obj, best = None, None
    for x_tup in itertools.product(*x_rows):
        x = np.array(x_tup, dtype=np.int64)
        for xn_tup in itertools.product(*xn_rows):
            xn = np.array(xn_tup, dtype=np.int64)
            load = x + xn
            y = (load.sum(axis=0) > 0).astype(np.int64)
            used = u.T @ load            # R x J
            if np.any(used > s.T * y):
                continue
            z = np.maximum(0, x - n)
            assign_base = x if assignment_cost_mode == "plan" else n
            obj = float((inst.c_assign * assign_base).sum() + inst.c_run @ y
                        + (inst.c_mig * z).sum() + (inst.c_new * xn).sum())
            if best_obj is None or obj < best_obj:
                best_obj, best = obj, (x, y, z, xn)
    if best is None:
        return "infeasible", None, None
    return "optimal", best_obj, best
