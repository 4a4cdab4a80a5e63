"""Bounded-variable linear programs solved by the revised simplex method.

The solver keeps explicit lower/upper bounds on every variable, so nonbasic
variables rest at one of their finite bounds instead of being forced to zero.
That is what makes the reduced costs directly usable for variable fixing.

Convention throughout: minimization, reduced cost r_j = c_j - y . A_j.  At an
optimal basis a variable nonbasic at its lower bound has r_j >= 0 and one
nonbasic at its upper bound has r_j <= 0 (within duality_tol).

Two entry points matter to callers:

* :func:`solve_lp` -- fresh two-phase primal solve of a LinearProgram.
* :class:`SimplexCore` -- reusable working state for branch and bound: the
  tree search mutates variable bounds between nodes and re-optimizes with the
  dual simplex from the current basis, falling back to a fresh primal solve
  when the warm start is unusable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Row senses.
LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)

# Solve statuses.
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Per-variable basis status codes (LpSolution.basis_status).
BASIC, AT_LOWER, AT_UPPER, FREE_NONBASIC = 0, 1, 2, 3

# Default tolerances.  feas_tol is scaled by max(1, |rhs|) per row, the
# duality tolerance is relative to max(1, |objective|).
FEAS_TOL = 1e-7
DUALITY_TOL = 1e-6
PIVOT_TOL = 1e-9
STALL_LIMIT = 1000  # degenerate pivots tolerated before switching to Bland's rule

_REFACTOR_EVERY = 100
_DEGEN_TOL = 1e-12


class NumericalBreakdown(RuntimeError):
    """Pivoting could not continue reliably; the instance likely needs rescaling."""


def _as_float_array(a, shape_hint=None):
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0 and shape_hint is not None:
        arr = np.full(shape_hint, float(arr))
    return arr


@dataclass(frozen=True)
class LinearProgram:
    """min c.x + offset  s.t.  A x (<=,=,>=) b,  lb <= x <= ub.

    Rows are dense; senses is one of "<=", "=", ">=" per row.  Bounds may be
    infinite (-inf lower, +inf upper) but never crossed.
    """

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        c = _as_float_array(self.c)
        n = c.shape[0]
        A = _as_float_array(self.A)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError(f"constraint matrix shape {A.shape} incompatible with {n} variables")
        m = A.shape[0]
        b = _as_float_array(self.b)
        if b.shape != (m,):
            raise ValueError("rhs length does not match row count")
        senses = tuple(self.senses)
        if len(senses) != m:
            raise ValueError("senses length does not match row count")
        for s in senses:
            if s not in _SENSES:
                raise ValueError(f"unknown row sense {s!r}")
        lb = _as_float_array(self.lb, (n,))
        ub = _as_float_array(self.ub, (n,))
        if lb.shape != (n,) or ub.shape != (n,):
            raise ValueError("bound vectors must have one entry per variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("objective, rows and rhs must be finite")
        if np.any(lb > ub):
            raise ValueError("crossed variable bounds (lb > ub)")
        if np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise ValueError("lower bounds must be < +inf and upper bounds > -inf")
        for name, arr in (("c", c), ("A", A), ("b", b), ("lb", lb), ("ub", ub)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_rows(cls, c, rows, lb, ub, offset=0.0):
        """Build from a list of (coefficients, sense, rhs) triples."""
        c = _as_float_array(c)
        n = c.shape[0]
        m = len(rows)
        A = np.zeros((m, n))
        b = np.zeros(m)
        senses = []
        for k, (coefs, sense, rhs) in enumerate(rows):
            A[k] = _as_float_array(coefs)
            senses.append(sense)
            b[k] = rhs
        return cls(c, A, tuple(senses), b, lb, ub, offset)

    @property
    def num_vars(self):
        return self.c.shape[0]

    @property
    def num_rows(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class LpSolution:
    """Primal/dual solution record returned by solve_lp."""

    status: str
    x: np.ndarray | None
    objective: float | None
    duals: np.ndarray | None
    reduced_costs: np.ndarray | None
    basis_status: np.ndarray | None
    iterations: int

    def __post_init__(self):
        for name in ("x", "duals", "reduced_costs", "basis_status"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class KktViolation:
    """One violated optimality condition: kind, row/variable index, magnitude."""

    kind: str
    index: int | None
    amount: float


class SimplexCore:
    """Revised simplex working state over the equality standard form.

    Columns are laid out [structural | slack | artificial].  Slack bounds
    encode the row senses; artificial columns stay pinned at zero except
    while a fresh phase-1 solve is running.  Between solves a caller may
    replace the structural bounds (set_bounds) and re-optimize with
    dual_reopt, which reuses the current basis.
    """

    NEED_FRESH = "need_fresh"

    def __init__(self, c, A, senses, b, lb, ub):
        A = np.asarray(A, dtype=float)
        m, n = A.shape
        self.m, self.n = m, n
        self.b = np.asarray(b, dtype=float).copy()
        eye = np.eye(m)
        self.A = np.hstack([A, eye, eye.copy()]) if m else np.zeros((0, n))
        self.nt = n + 2 * m  # total columns

        slack_lo = np.zeros(m)
        slack_hi = np.zeros(m)
        for i, s in enumerate(senses):
            if s == LE:
                slack_lo[i], slack_hi[i] = 0.0, np.inf
            elif s == GE:
                slack_lo[i], slack_hi[i] = -np.inf, 0.0
            else:
                slack_lo[i], slack_hi[i] = 0.0, 0.0
        self.lo = np.concatenate([np.asarray(lb, dtype=float), slack_lo, np.zeros(m)])
        self.hi = np.concatenate([np.asarray(ub, dtype=float), slack_hi, np.zeros(m)])

        self.cost = np.zeros(self.nt)
        self.cost[:n] = np.asarray(c, dtype=float)

        self.basis = np.arange(m)  # placeholder, filled by fresh_solve
        self.binv = np.eye(m)
        self.xB = np.zeros(m)
        self.vstat = np.full(self.nt, AT_LOWER, dtype=np.int8)
        self.xval = np.zeros(self.nt)
        self.iterations = 0
        self._b_scale = max(1.0, float(np.max(np.abs(self.b))) if m else 1.0)
        self._c_scale = max(1.0, float(np.max(np.abs(self.cost))) if self.nt else 1.0)
        self._entering_tol = 1e-9 * self._c_scale
        self._have_basis = False
        self._eta_count = 0  # pivots since the last factorization
        self._binv_stale = False  # basis replaced wholesale, inverse not rebuilt yet
        self._scratch = np.empty((m, m))

    # -- bound management ---------------------------------------------------

    def set_bounds(self, lb, ub):
        """Replace structural bounds and snap nonbasic variables onto them."""
        n = self.n
        self.lo[:n] = lb
        self.hi[:n] = ub
        self._sanitize_nonbasic()

    def save_basis(self):
        """Snapshot (basis, statuses); restorable under different bounds."""
        return self.basis.copy(), self.vstat.copy()

    def load_basis(self, snap):
        """Adopt a snapshot; nonbasic variables snap onto the current bounds."""
        basis, vstat = snap
        same = self._have_basis and not self._binv_stale and np.array_equal(self.basis, basis)
        self.basis = basis.copy()
        self.vstat = vstat.copy()
        self._have_basis = True
        if not same:
            self._binv_stale = True
        self._sanitize_nonbasic()

    def _sanitize_nonbasic(self):
        lo, hi, vstat = self.lo, self.hi, self.vstat
        nb_low = vstat == AT_LOWER
        nb_up = vstat == AT_UPPER
        # a nonbasic variable must sit on a finite bound
        bad_low = nb_low & ~np.isfinite(lo)
        vstat[bad_low & np.isfinite(hi)] = AT_UPPER
        vstat[bad_low & ~np.isfinite(hi)] = FREE_NONBASIC
        bad_up = nb_up & ~np.isfinite(hi)
        vstat[bad_up & np.isfinite(lo)] = AT_LOWER
        vstat[bad_up & ~np.isfinite(lo)] = FREE_NONBASIC
        free = vstat == FREE_NONBASIC
        refine = free & np.isfinite(lo)
        vstat[refine] = AT_LOWER
        free = vstat == FREE_NONBASIC
        refine = free & np.isfinite(hi)
        vstat[refine] = AT_UPPER
        self.xval[vstat == AT_LOWER] = lo[vstat == AT_LOWER]
        self.xval[vstat == AT_UPPER] = hi[vstat == AT_UPPER]
        self.xval[vstat == FREE_NONBASIC] = 0.0

    # -- factorization ------------------------------------------------------

    def _refactor(self):
        if self.m == 0:
            return
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis matrix") from exc
        self._eta_count = 0
        self._binv_stale = False
        self._recompute_xb()

    def _recompute_xb(self):
        xn = self.xval.copy()
        xn[self.basis] = 0.0
        self.xB = self.binv @ (self.b - self.A @ xn)

    def _feas_scale(self):
        """Per-column magnitude for feasibility tolerances.

        A huge right-hand side on one row (a slack cutoff, say) must not
        loosen the tolerance used on every other variable, so scales are
        local: structural columns use their own finite bounds, slack and
        artificial columns the |b| of their row.
        """
        lo, hi = self.lo, self.hi
        s = np.maximum(np.where(np.isfinite(lo), np.abs(lo), 0.0),
                       np.where(np.isfinite(hi), np.abs(hi), 0.0))
        s = np.maximum(s, 1.0)
        if self.m:
            babs = np.maximum(np.abs(self.b), 1.0)
            s[self.n:self.n + self.m] = np.maximum(s[self.n:self.n + self.m], babs)
            s[self.n + self.m:] = np.maximum(s[self.n + self.m:], babs)
        return s

    def _sync_xval(self):
        self.xval[self.basis] = self.xB

    # -- fresh two-phase primal solve ---------------------------------------

    def fresh_solve(self):
        """Two-phase primal simplex from a slack/artificial starting basis."""
        m, n = self.m, self.n
        if m == 0:
            return self._solve_without_rows()

        self._sanitize_nonbasic()
        # structural vars nonbasic at a finite bound (lower preferred)
        vstat = self.vstat
        for j in range(self.nt):
            if np.isfinite(self.lo[j]):
                vstat[j] = AT_LOWER
                self.xval[j] = self.lo[j]
            elif np.isfinite(self.hi[j]):
                vstat[j] = AT_UPPER
                self.xval[j] = self.hi[j]
            else:
                vstat[j] = FREE_NONBASIC
                self.xval[j] = 0.0

        # artificial columns start inert
        art0 = n + m
        self.A[:, art0:art0 + m] = np.eye(m)
        self.lo[art0:] = 0.0
        self.hi[art0:] = 0.0

        resid = self.b - self.A[:, :n] @ self.xval[:n]
        basis = np.empty(m, dtype=int)
        need_phase1 = False
        for i in range(m):
            s_col = n + i
            s_val = resid[i]
            if self.lo[s_col] <= s_val <= self.hi[s_col]:
                basis[i] = s_col
                vstat[s_col] = BASIC
                self.xval[s_col] = s_val
            else:
                # slack parks at its nearest bound, artificial soaks the rest
                s_at = min(max(s_val, self.lo[s_col]), self.hi[s_col])
                vstat[s_col] = AT_LOWER if s_at == self.lo[s_col] else AT_UPPER
                self.xval[s_col] = s_at
                a_col = art0 + i
                a_val = s_val - s_at
                self.A[i, a_col] = 1.0 if a_val >= 0 else -1.0
                self.hi[a_col] = np.inf
                basis[i] = a_col
                vstat[a_col] = BASIC
                self.xval[a_col] = abs(a_val)
                need_phase1 = True
        self.basis = basis
        diag = self.A[np.arange(m), basis]
        self.binv = np.diag(1.0 / diag)
        self.xB = self.xval[basis].copy()
        self._have_basis = True
        self._eta_count = 0
        self._binv_stale = False

        if need_phase1:
            c1 = np.zeros(self.nt)
            c1[art0:] = 1.0
            status = self._primal(c1)
            if status == UNBOUNDED:
                raise NumericalBreakdown("phase-1 objective unbounded")
            self._sync_xval()
            # artificial values are exactly the per-row residuals
            art_vals = np.abs(self.xval[art0:])
            row_scale = np.maximum(np.abs(self.b), 1.0)
            if np.any(art_vals > FEAS_TOL * row_scale):
                return INFEASIBLE
            self._drive_out_artificials()
        # pin artificials for phase 2
        self.hi[art0:] = 0.0

        status = self._primal(self.cost)
        self._sync_xval()
        return status

    def _solve_without_rows(self):
        c, lo, hi = self.cost[: self.n], self.lo[: self.n], self.hi[: self.n]
        x = np.where(c > 0, lo, np.where(c < 0, hi, np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))))
        if np.any(~np.isfinite(x)):
            return UNBOUNDED
        self.xval[: self.n] = x
        self.vstat[: self.n] = np.where(x == lo, AT_LOWER, AT_UPPER)
        self.vstat[: self.n][~np.isfinite(lo) & ~np.isfinite(hi)] = FREE_NONBASIC
        self._have_basis = True
        return OPTIMAL

    def _drive_out_artificials(self):
        """Pivot zero-valued basic artificials out where a usable column exists."""
        m, n = self.m, self.n
        art0 = n + m
        for i in range(m):
            if self.basis[i] < art0:
                continue
            alpha = self.binv[i] @ self.A[:, :art0]
            candidates = np.flatnonzero((np.abs(alpha) > 1e-7) & (self.vstat[:art0] != BASIC))
            if candidates.size == 0:
                continue  # dependent row; artificial stays basic at zero
            j = int(candidates[np.argmax(np.abs(alpha[candidates]))])
            self._pivot(i, j, self.xval[j])
        # any artificial still basic keeps bounds [0, 0] and never moves again

    # -- primal simplex -----------------------------------------------------

    def _primal(self, cost):
        m = self.m
        degen = 0
        bland = False
        cap = 2000 + 200 * (self.nt + m)
        iters = 0
        movable = (self.hi - self.lo) > 0
        while True:
            iters += 1
            self.iterations += 1
            if iters > cap:
                raise NumericalBreakdown("primal iteration limit exceeded")
            if self._binv_stale or self._eta_count >= _REFACTOR_EVERY:
                self._sync_xval()
                self._refactor()

            y = cost[self.basis] @ self.binv
            r = cost - y @ self.A
            vstat = self.vstat
            tol = self._entering_tol if not bland else PIVOT_TOL
            elig = movable & (
                ((vstat == AT_LOWER) & (r < -tol))
                | ((vstat == AT_UPPER) & (r > tol))
                | ((vstat == FREE_NONBASIC) & (np.abs(r) > tol))
            )
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                return OPTIMAL
            if bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(r[idx]))])
            d = 1.0 if (vstat[j] == AT_LOWER or (vstat[j] == FREE_NONBASIC and r[j] < 0)) else -1.0

            w = self.binv @ self.A[:, j]
            g = -d * w  # basic values move by t*g
            lB = self.lo[self.basis]
            uB = self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                t_up = np.where(g > PIVOT_TOL, (uB - self.xB) / g, np.inf)
                t_dn = np.where(g < -PIVOT_TOL, (lB - self.xB) / g, np.inf)
            t_basic = np.minimum(t_up, t_dn)
            t_basic = np.maximum(t_basic, 0.0)  # clamp tiny negative (degenerate) ratios
            i_min = int(np.argmin(t_basic)) if m else -1
            t_star_basic = t_basic[i_min] if m else np.inf
            span = self.hi[j] - self.lo[j]
            t_flip = span if np.isfinite(span) else np.inf

            if t_flip <= t_star_basic:
                if not np.isfinite(t_flip):
                    return UNBOUNDED
                # bound flip: j jumps to its other bound, basis unchanged
                self.xB += t_flip * g
                if vstat[j] == AT_LOWER:
                    vstat[j] = AT_UPPER
                    self.xval[j] = self.hi[j]
                else:
                    vstat[j] = AT_LOWER
                    self.xval[j] = self.lo[j]
                degen = degen + 1 if t_flip <= _DEGEN_TOL else 0
                if degen > STALL_LIMIT:
                    bland = True
                continue
            if not np.isfinite(t_star_basic):
                return UNBOUNDED

            # leaving choice: among near-tied ratios prefer the largest pivot
            ties = np.flatnonzero(t_basic <= t_star_basic + 1e-12 * (1.0 + abs(t_star_basic)))
            if bland:
                i_leave = int(ties[np.argmin(self.basis[ties])])
            else:
                i_leave = int(ties[np.argmax(np.abs(g[ties]))])
            if abs(w[i_leave]) < PIVOT_TOL:
                self._sync_xval()
                self._refactor()
                w = self.binv @ self.A[:, j]
                if abs(w[i_leave]) < PIVOT_TOL:
                    raise NumericalBreakdown("pivot element below tolerance")
            t = float(t_basic[i_leave])
            self.xB += t * g
            enter_val = self.xval[j] + d * t
            lv = self.basis[i_leave]
            to_upper = g[i_leave] > 0
            self.vstat[lv] = AT_UPPER if to_upper else AT_LOWER
            self.xval[lv] = uB[i_leave] if to_upper else lB[i_leave]
            self._pivot(i_leave, j, enter_val, w=w)
            degen = degen + 1 if t <= _DEGEN_TOL else 0
            if degen > STALL_LIMIT:
                bland = True

    def _pivot(self, i, j, enter_val, w=None):
        """Enter column j at basis row i with value enter_val, update B^-1."""
        if w is None:
            w = self.binv @ self.A[:, j]
        piv = w[i]
        if abs(piv) < PIVOT_TOL:
            raise NumericalBreakdown("pivot element below tolerance")
        rowi = self.binv[i] / piv
        np.multiply(w[:, None], rowi[None, :], out=self._scratch)
        self.binv -= self._scratch
        self.binv[i] = rowi
        self.basis[i] = j
        self.vstat[j] = BASIC
        self.xB[i] = enter_val
        self._eta_count += 1

    # -- dual simplex reoptimization ----------------------------------------

    def dual_reopt(self):
        """Re-optimize after bound changes, starting from the current basis.

        Returns OPTIMAL, INFEASIBLE, or NEED_FRESH when the warm start is not
        dual feasible or breaks down (caller should do a fresh solve).
        """
        if not self._have_basis or self.m == 0:
            return self.NEED_FRESH
        try:
            # basic values depend on the nonbasic ones, which set_bounds may
            # have moved; the inverse only goes stale with pivots or a load
            if self._binv_stale or self._eta_count >= _REFACTOR_EVERY:
                self._refactor()
            else:
                self._recompute_xb()
        except NumericalBreakdown:
            return self.NEED_FRESH
        cost = self.cost
        y = cost[self.basis] @ self.binv
        r = cost - y @ self.A
        vstat = self.vstat
        movable = (self.hi - self.lo) > 0
        dtol = 1e-7 * self._c_scale
        # wrong-signed nonbasic columns (a bound pinned when the basis was
        # saved may have been released since) are repaired by flipping them
        # to their other bound, which restores dual feasibility untouched
        flip_up = movable & (vstat == AT_LOWER) & (r < -dtol) & np.isfinite(self.hi)
        flip_dn = movable & (vstat == AT_UPPER) & (r > dtol) & np.isfinite(self.lo)
        flipped = bool(np.any(flip_up) or np.any(flip_dn))
        if flipped:
            vstat[flip_up] = AT_UPPER
            self.xval[flip_up] = self.hi[flip_up]
            vstat[flip_dn] = AT_LOWER
            self.xval[flip_dn] = self.lo[flip_dn]
        bad = movable & (
            ((vstat == AT_LOWER) & (r < -dtol))
            | ((vstat == AT_UPPER) & (r > dtol))
            | ((vstat == FREE_NONBASIC) & (np.abs(r) > dtol))
        )
        if np.any(bad):
            return self.NEED_FRESH
        if flipped:
            self._recompute_xb()

        m = self.m
        degen = 0
        bland = False
        cap = 2000 + 200 * (self.nt + m)
        iters = 0
        fscale = self._feas_scale()
        while True:
            iters += 1
            self.iterations += 1
            if iters > cap:
                return self.NEED_FRESH
            if self._eta_count >= _REFACTOR_EVERY:
                self._sync_xval()
                self._refactor()
                y = cost[self.basis] @ self.binv
                r = cost - y @ self.A
            lB = self.lo[self.basis]
            uB = self.hi[self.basis]
            viol_lo = lB - self.xB
            viol_up = self.xB - uB
            viol = np.maximum(viol_lo, viol_up) / fscale[self.basis]
            worst = float(np.max(viol)) if m else 0.0
            if worst <= FEAS_TOL:
                self._sync_xval()
                return OPTIMAL
            if bland:
                rows = np.flatnonzero(viol > FEAS_TOL)
                i = int(rows[np.argmin(self.basis[rows])])
            else:
                i = int(np.argmax(viol))
            to_upper = viol_up[i] > viol_lo[i]

            alpha = self.binv[i] @ self.A
            d_row = alpha if to_upper else -alpha
            elig = movable & (
                ((vstat == AT_LOWER) & (d_row > PIVOT_TOL))
                | ((vstat == AT_UPPER) & (d_row < -PIVOT_TOL))
                | ((vstat == FREE_NONBASIC) & (np.abs(d_row) > PIVOT_TOL))
            )
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                return INFEASIBLE
            # eligible columns have |d_row| > PIVOT_TOL, division is safe
            ratios = np.abs(r[idx] / d_row[idx])
            theta = float(np.min(ratios))
            ties = idx[np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + theta))]
            if bland:
                e = int(ties[0])
            else:
                e = int(ties[np.argmax(np.abs(d_row[ties]))])

            w = self.binv @ self.A[:, e]
            piv = w[i]
            if abs(piv) < PIVOT_TOL:
                self._sync_xval()
                self._refactor()
                y = cost[self.basis] @ self.binv
                r = cost - y @ self.A
                w = self.binv @ self.A[:, e]
                piv = w[i]
                if abs(piv) < PIVOT_TOL:
                    return self.NEED_FRESH
            target = uB[i] if to_upper else lB[i]
            t = (self.xB[i] - target) / piv
            lv = self.basis[i]
            theta_signed = r[e] / piv if abs(piv) > 0 else 0.0
            # update reduced costs incrementally (refreshed at refactors)
            row_for_r = alpha
            r = r - theta_signed * row_for_r
            r[e] = 0.0
            r[lv] = -theta_signed

            self.xB -= t * w
            enter_val = self.xval[e] + t
            self.vstat[lv] = AT_UPPER if to_upper else AT_LOWER
            self.xval[lv] = target
            self._pivot(i, e, enter_val, w=w)
            degen = degen + 1 if abs(theta) <= _DEGEN_TOL else 0
            if degen > STALL_LIMIT:
                bland = True

    # -- solution extraction -------------------------------------------------

    def primal_solution(self):
        """(x, objective) for structural vars; skips the dual computation."""
        n = self.n
        self._sync_xval()
        x = self.xval[:n].copy()
        return x, float(self.cost[:n] @ x)

    def reduced_costs(self):
        """(reduced_costs, basis_status) for structural vars at the current basis."""
        n = self.n
        if self.m:
            y = self.cost[self.basis] @ self.binv
            r = self.cost - y @ self.A
        else:
            r = self.cost.copy()
        return r[:n].copy(), self.vstat[:n].copy()

    def solution(self):
        """(x, objective, duals, reduced_costs, basis_status) for structural vars."""
        n = self.n
        self._sync_xval()
        x = self.xval[:n].copy()
        obj = float(self.cost[:n] @ x)
        if self.m:
            y = self.cost[self.basis] @ self.binv
            r = self.cost - y @ self.A
        else:
            y = np.zeros(0)
            r = self.cost.copy()
        return x, obj, y.copy(), r[:n].copy(), self.vstat[:n].copy()


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve a bounded-variable LP; returns status, primal/dual values and reduced costs."""
    core = SimplexCore(lp.c, lp.A, lp.senses, lp.b, lp.lb, lp.ub)
    status = core.fresh_solve()
    if status != OPTIMAL:
        return LpSolution(status, None, None, None, None, None, core.iterations)
    x, obj, y, r, vstat = core.solution()
    return LpSolution(OPTIMAL, x, obj + lp.offset, y, r, vstat, core.iterations)


def _dual_objective(lp, duals, reduced):
    """y.b plus bound terms; the independent dual value used in the gap check."""
    val = float(duals @ lp.b) if lp.num_rows else 0.0
    pos = np.maximum(reduced, 0.0)
    neg = np.maximum(-reduced, 0.0)
    terms_lo = np.where(pos > 0, lp.lb * pos, 0.0)
    terms_hi = np.where(neg > 0, lp.ub * neg, 0.0)
    return val + float(np.sum(terms_lo)) - float(np.sum(terms_hi)) + lp.offset


def verify_kkt(lp: LinearProgram, sol: LpSolution,
               feas_tol: float = FEAS_TOL, duality_tol: float = DUALITY_TOL) -> list:
    """Check a claimed optimal solution against the KKT conditions.

    Returns a list of KktViolation records; empty means the solution passes
    primal feasibility, dual feasibility, complementary slackness and the
    strong duality gap test at the given tolerances.
    """
    if sol.status != OPTIMAL:
        return [KktViolation("status", None, math.inf)]
    out = []
    x = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.duals, dtype=float)
    r = np.asarray(sol.reduced_costs, dtype=float)

    ax = lp.A @ x if lp.num_rows else np.zeros(0)
    for i in range(lp.num_rows):
        tol = feas_tol * max(1.0, abs(lp.b[i]))
        diff = ax[i] - lp.b[i]
        sense = lp.senses[i]
        if sense == LE and diff > tol:
            out.append(KktViolation("row_feasibility", i, float(diff)))
        elif sense == GE and -diff > tol:
            out.append(KktViolation("row_feasibility", i, float(-diff)))
        elif sense == EQ and abs(diff) > tol:
            out.append(KktViolation("row_feasibility", i, float(abs(diff))))

    for j in range(lp.num_vars):
        tol = feas_tol * max(1.0, abs(x[j]))
        if x[j] < lp.lb[j] - tol:
            out.append(KktViolation("bound_feasibility", j, float(lp.lb[j] - x[j])))
        elif x[j] > lp.ub[j] + tol:
            out.append(KktViolation("bound_feasibility", j, float(x[j] - lp.ub[j])))

    # duals must price rows consistently with their sense: min problem,
    # r = c - y.A, so "<=" rows take y <= 0 and ">=" rows take y >= 0
    dtol = duality_tol * max(1.0, float(np.max(np.abs(lp.c))) if lp.num_vars else 1.0)
    for i in range(lp.num_rows):
        if lp.senses[i] == LE and y[i] > dtol:
            out.append(KktViolation("dual_sign", i, float(y[i])))
        elif lp.senses[i] == GE and y[i] < -dtol:
            out.append(KktViolation("dual_sign", i, float(-y[i])))
        slack = lp.b[i] - ax[i]
        comp = abs(y[i] * slack)
        if comp > duality_tol * max(1.0, abs(lp.b[i])) * max(1.0, abs(y[i])):
            out.append(KktViolation("row_comp_slack", i, float(comp)))

    # reduced cost consistency and sign conditions per variable
    r_check = lp.c - (y @ lp.A if lp.num_rows else 0.0)
    for j in range(lp.num_vars):
        if abs(r_check[j] - r[j]) > dtol:
            out.append(KktViolation("reduced_cost_mismatch", j, float(abs(r_check[j] - r[j]))))
        interior_lo = x[j] > lp.lb[j] + feas_tol * max(1.0, abs(x[j]))
        interior_hi = x[j] < lp.ub[j] - feas_tol * max(1.0, abs(x[j]))
        if interior_lo and interior_hi and abs(r[j]) > dtol:
            out.append(KktViolation("reduced_cost_interior", j, float(abs(r[j]))))
        elif not interior_lo and r[j] < -dtol:
            out.append(KktViolation("reduced_cost_sign", j, float(-r[j])))
        elif not interior_hi and interior_lo and r[j] > dtol:
            out.append(KktViolation("reduced_cost_sign", j, float(r[j])))

    primal = float(lp.c @ x) + lp.offset
    dual = _dual_objective(lp, y, r_check)
    gap = abs(primal - dual)
    if gap > duality_tol * max(1.0, abs(primal)):
        out.append(KktViolation("duality_gap", None, float(gap)))
    return out


def format_lp(lp: LinearProgram) -> str:
    """Human-readable listing, one constraint per line (debug aid)."""
    lines = []
    terms = " + ".join(f"{lp.c[j]:g} x{j}" for j in range(lp.num_vars) if lp.c[j] != 0)
    if lp.offset:
        terms = f"{terms} + {lp.offset:g}" if terms else f"{lp.offset:g}"
    lines.append(f"min {terms or '0'}")
    for i in range(lp.num_rows):
        row = " + ".join(f"{lp.A[i, j]:g} x{j}" for j in range(lp.num_vars) if lp.A[i, j] != 0)
        lines.append(f"  {row or '0'} {lp.senses[i]} {lp.b[i]:g}")
    for j in range(lp.num_vars):
        lines.append(f"  {lp.lb[j]:g} <= x{j} <= {lp.ub[j]:g}")
    return "\n".join(lines)
