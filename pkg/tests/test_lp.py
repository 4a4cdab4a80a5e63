"""Simplex solver tests: pinned examples, KKT checks, and oracle batteries."""

import numpy as np
import pytest

from vmcons import lp as lpmod
from vmcons.lp import (
    LE, EQ, GE, OPTIMAL, INFEASIBLE, UNBOUNDED,
    LinearProgram, LpSolution, solve_lp, verify_kkt, format_lp,
)

import oracles


def test_one_constraint_face():
    """min -x1-x2 s.t. x1+x2 <= 1, x in [0,1]^2: optimum forced onto the face."""
    prob = LinearProgram.from_rows([-1.0, -1.0], [([1.0, 1.0], LE, 1.0)],
                                   [0.0, 0.0], [1.0, 1.0])
    sol = solve_lp(prob)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.0, abs=1e-9)
    assert sol.x[0] + sol.x[1] == pytest.approx(1.0, abs=1e-9)
    basic = np.flatnonzero(sol.basis_status == lpmod.BASIC)
    for j in basic:
        assert abs(sol.reduced_costs[j]) <= 1e-9


def test_no_constraints_all_at_lower():
    """Empty row list, bounds [0,1], c >= 0: everything rests at zero, r = c."""
    c = np.array([0.0, 0.5, 2.0])
    prob = LinearProgram(c, np.zeros((0, 3)), (), np.zeros(0),
                         np.zeros(3), np.ones(3))
    sol = solve_lp(prob)
    assert sol.status == OPTIMAL
    assert sol.objective == 0.0
    np.testing.assert_array_equal(sol.x, np.zeros(3))
    np.testing.assert_array_equal(sol.reduced_costs, c)


def test_two_server_relaxation_matches_vertex_oracle():
    """Relaxation of a 2-server, 1-VM-type consolidation model vs brute force.

    Server data is catalog row 1 (CPU 4, RAM 8, BW 1000); the VM asks 2 CPU,
    4 RAM, 100 BW.  Variables: x11, x12, z11, z12, y1, y2 with d = 3 VMs
    currently all on server 1 and no new VMs.
    """
    u = np.array([2.0, 4.0, 100.0])
    s = np.array([4.0, 8.0, 1000.0])
    d = 3.0
    n = np.array([3.0, 0.0])
    c_run = 108.0
    c_assign = 72.0 * (2.0 / 4.0)
    rows = []
    # capacity per resource and server: u*x_j - s_r*y_j <= 0
    for r in range(3):
        rows.append(([u[r], 0.0, 0.0, 0.0, -s[r], 0.0], LE, 0.0))
        rows.append(([0.0, u[r], 0.0, 0.0, 0.0, -s[r]], LE, 0.0))
    # migration: x_j - z_j <= n_j
    rows.append(([1.0, 0.0, -1.0, 0.0, 0.0, 0.0], LE, n[0]))
    rows.append(([0.0, 1.0, 0.0, -1.0, 0.0, 0.0], LE, n[1]))
    # demand: x1 + x2 = d
    rows.append(([1.0, 1.0, 0.0, 0.0, 0.0, 0.0], EQ, d))
    c = [c_assign, c_assign, c_assign, c_assign, c_run, c_run]
    lb = [0.0] * 6
    ub = [2.0, 2.0, 3.0, 3.0, 1.0, 1.0]  # v_ij = min(3, floor caps) = 2
    prob = LinearProgram.from_rows(c, rows, lb, ub)
    sol = solve_lp(prob)
    assert sol.status == OPTIMAL
    status, obj, _ = oracles.lp_vertex_oracle(c, prob.A, prob.senses, prob.b, lb, ub)
    assert status == "optimal"
    assert sol.objective == pytest.approx(obj, abs=1e-6)
    assert verify_kkt(prob, sol) == []


def test_kkt_empty_on_solver_output():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n, m = 6, 4
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0.2, 0.8, size=n)
        b = A @ x0 + rng.uniform(0.1, 1.0, size=m)
        prob = LinearProgram(rng.normal(size=n), A, (LE,) * m, b,
                             np.zeros(n), np.ones(n))
        sol = solve_lp(prob)
        assert sol.status == OPTIMAL
        assert verify_kkt(prob, sol) == []


def test_kkt_single_primal_violation_magnitude():
    """Hand-built solution violating one row by exactly 0.5."""
    prob = LinearProgram.from_rows([0.0], [([1.0], LE, 1.0)], [0.0], [2.0])
    sol = LpSolution(OPTIMAL, np.array([1.5]), 0.0, np.array([0.0]),
                     np.array([0.0]), None, 0)
    out = verify_kkt(prob, sol)
    assert len(out) == 1
    assert out[0].kind == "row_feasibility"
    assert out[0].amount == pytest.approx(0.5)


def test_kkt_flags_perturbed_solution():
    prob = LinearProgram.from_rows([-1.0, -1.0], [([1.0, 1.0], LE, 1.0)],
                                   [0.0, 0.0], [1.0, 1.0])
    sol = solve_lp(prob)
    x = sol.x.copy()
    x[0] += 1e-3  # pushes past the active face
    bad = LpSolution(OPTIMAL, x, sol.objective, sol.duals,
                     sol.reduced_costs, sol.basis_status, sol.iterations)
    assert verify_kkt(prob, bad) != []


def test_infeasible_and_unbounded_classification():
    prob = LinearProgram.from_rows([1.0], [([1.0], GE, 5.0)], [0.0], [1.0])
    assert solve_lp(prob).status == INFEASIBLE
    prob = LinearProgram.from_rows([-1.0], [([0.0], LE, 1.0)], [0.0], [np.inf])
    assert solve_lp(prob).status == UNBOUNDED


def test_deterministic_resolve():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(8, 12))
    x0 = rng.uniform(0.1, 0.9, size=12)
    b = A @ x0 + 0.5
    prob = LinearProgram(rng.normal(size=12), A, (LE,) * 8, b,
                         np.zeros(12), np.ones(12))
    s1 = solve_lp(prob)
    s2 = solve_lp(prob)
    assert s1.status == s2.status == OPTIMAL
    assert s1.objective == s2.objective
    np.testing.assert_array_equal(s1.x, s2.x)


def test_reduced_cost_signs_at_bounds():
    """Nonbasic at lower => r >= -tol; nonbasic at upper => r <= +tol."""
    rng = np.random.default_rng(29)
    for _ in range(40):
        n = int(rng.integers(3, 10))
        m = int(rng.integers(1, 6))
        A = rng.normal(size=(m, n))
        x0 = rng.uniform(0.2, 0.8, size=n)
        senses = tuple(rng.choice([LE, GE]) for _ in range(m))
        slack = rng.uniform(0.1, 1.0, size=m)
        b = A @ x0 + np.where(np.array(senses) == LE, slack, -slack)
        prob = LinearProgram(rng.normal(size=n), A, senses, b,
                             np.zeros(n), np.ones(n))
        sol = solve_lp(prob)
        assert sol.status == OPTIMAL
        tol = 1e-6 * max(1.0, np.max(np.abs(prob.c)))
        at_lo = sol.basis_status == lpmod.AT_LOWER
        at_up = sol.basis_status == lpmod.AT_UPPER
        assert np.all(sol.reduced_costs[at_lo] >= -tol)
        assert np.all(sol.reduced_costs[at_up] <= tol)


def test_small_lps_match_vertex_oracle():
    rng = np.random.default_rng(101)
    for _ in range(60):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 5))
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        x0 = rng.uniform(0.2, 0.8, size=n)
        senses = tuple(rng.choice([LE, GE, EQ], p=[0.5, 0.3, 0.2]) for _ in range(m))
        b = np.empty(m)
        for i, sgn in enumerate(senses):
            if sgn == LE:
                b[i] = A[i] @ x0 + rng.uniform(0.05, 0.5)
            elif sgn == GE:
                b[i] = A[i] @ x0 - rng.uniform(0.05, 0.5)
            else:
                b[i] = A[i] @ x0
        c = rng.normal(size=n)
        lb = np.zeros(n)
        ub = rng.uniform(0.9, 2.0, size=n)
        prob = LinearProgram(c, A, senses, b, lb, ub)
        sol = solve_lp(prob)
        assert sol.status == OPTIMAL
        status, obj, _ = oracles.lp_vertex_oracle(c, A, senses, b, lb, ub)
        assert status == "optimal"
        assert sol.objective == pytest.approx(obj, abs=1e-6 * max(1, abs(obj)))
        assert verify_kkt(prob, sol) == []


def test_equality_rows_and_finite_bounds():
    """Transportation-style equalities keep both phases honest."""
    # two supplies (2, 3), two demands (1, 4); min cost flow on 4 arcs
    c = np.array([1.0, 3.0, 2.0, 1.0])
    A = np.array([
        [1.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
    ])
    b = np.array([2.0, 3.0, 1.0, 4.0])
    prob = LinearProgram(c, A, (EQ, EQ, EQ, EQ), b, np.zeros(4), np.full(4, 10.0))
    sol = solve_lp(prob)
    assert sol.status == OPTIMAL
    # optimum ships x = (1, 1, 0, 3): cost 1 + 3 + 0 + 3 = 7
    assert sol.objective == pytest.approx(7.0, abs=1e-8)
    assert verify_kkt(prob, sol) == []


def test_dump_listing_mentions_every_row():
    prob = LinearProgram.from_rows([1.0, 2.0], [([1.0, 1.0], LE, 3.0), ([1.0, -1.0], GE, 0.0)],
                                   [0.0, 0.0], [5.0, 5.0])
    text = format_lp(prob)
    assert text.count("<=") >= 1 and ">=" in text and text.startswith("min")


def test_validation_rejects_bad_programs():
    with pytest.raises(ValueError):
        LinearProgram([1.0], np.zeros((0, 1)), (), np.zeros(0), [2.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.nan], np.zeros((0, 1)), (), np.zeros(0), [0.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram.from_rows([1.0, 1.0], [([1.0, 1.0], "<", 1.0)], [0, 0], [1, 1])
