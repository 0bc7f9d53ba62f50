"""End-to-end acceptance checks, one test per shipped contract.

Each test exercises one guarantee at scale with hard numeric tolerances
and a wall-clock ceiling.  The terminal-summary hook in conftest.py
prints one [PASS]/[FAIL] line per criterion after the run.
"""

import itertools
import math
import time

import numpy as np
import pytest
from conftest import mk, rand_sample

from qre.aspirational import (AcceptanceFamily, eval_mu,
                              eval_target_representation)
from qre.bench import (CobbDouglas, cobb_value, estimate_lipschitz, l1_error,
                       run_gap_experiment, _draw_sample)
from qre.envelope import eval_psi, eval_psi_milp
from qre.level_function import solve_level_function
from qre.levelsets import levelset_contains
from qre.perminv import (GroupShape, assignment_lp_value, eval_psi_perm,
                         min_permuted_inner, perm_oracle, permute_groups)
from qre.solver import Polyhedron, RobustProblem, solve_robust


def test_criterion_1_envelope_matches_disjunctive_oracle():
    # 500 random instances, clamped binary search vs the exact
    # mixed-binary program, both monotone modes
    t0 = time.monotonic()
    rng = np.random.default_rng(2001)
    worst = 0.0
    for i in range(500):
        s = rand_sample(rng, J=int(rng.integers(1, 17)), monotone=bool(i % 2))
        x = rng.uniform(-2.5, 2.5, s.dim)
        worst = max(worst, abs(eval_psi(s, x).value - eval_psi_milp(s, x)))
    assert worst <= 1e-5
    assert time.monotonic() - t0 <= 60.0


def test_criterion_2_level_set_membership_consistency():
    t0 = time.monotonic()
    rng = np.random.default_rng(2002)
    for i in range(200):
        s = rand_sample(rng, monotone=bool(i % 2))
        x = rng.uniform(-3.0, 3.0, s.dim)
        v = float(rng.uniform(s.v_max - 2.0, s.v_max))
        psi = eval_psi(s, x).value
        if abs(psi - v) > 1e-6:  # don't-care band right at the boundary
            assert levelset_contains(s, v, x) == (psi >= v)
    # nesting: members of the higher set belong to every lower set
    rng = np.random.default_rng(2102)
    for _ in range(20):
        s = rand_sample(rng)
        v_lo, v_hi = sorted(rng.uniform(s.v_max - 1.5, s.v_max, 2))
        for x in rng.uniform(-3.0, 3.0, (10, s.dim)):
            if levelset_contains(s, v_hi, x):
                assert levelset_contains(s, v_lo - 1e-9, x)
    # convexity: midpoints of members stay inside
    for _ in range(20):
        s = rand_sample(rng)
        v = float(rng.uniform(s.v_max - 1.0, s.v_max))
        members = [x for x in rng.uniform(-3.0, 3.0, (40, s.dim))
                   if levelset_contains(s, v, x)]
        for a, b in zip(members, members[1:]):
            assert levelset_contains(s, v - 1e-9, (a + b) / 2)
    assert time.monotonic() - t0 <= 30.0


def test_criterion_3_binary_search_probe_contract():
    t0 = time.monotonic()
    rng = np.random.default_rng(2003)
    for J in (16, 256, 4096):
        for mono in (False, True):
            pts = rng.uniform(-2.0, 2.0, (J, 2))
            vals = rng.uniform(0.0, 3.0, J)
            s = mk(pts, vals, lipschitz=1.0, monotone=mono)
            dom = Polyhedron(dim=2, lo=[-1.0, -1.0], hi=[1.0, 1.0])
            rep = solve_robust(s, RobustProblem(Z=dom))
            assert rep.subproblem_count <= math.ceil(math.log2(J)) + 1
            # deeper levels relax the subproblem, so the probe values
            # sorted by level never decrease
            probe_vals = [v for _, v in sorted(rep.probes)]
            assert all(a <= b + 1e-9
                       for a, b in zip(probe_vals, probe_vals[1:]))
    assert time.monotonic() - t0 <= 60.0


def test_criterion_4_robust_solve_grid_optimality():
    # box spans are sized so L * (grid step) / 2 <= 4.9e-3: the grid
    # maximum then brackets the true optimum inside the 5e-3 tolerance
    t0 = time.monotonic()
    rng = np.random.default_rng(2004)
    plans = [(1, 21)] * 60 + [(2, 15)] * 25 + [(3, 6)] * 15
    for i, (T, npts) in enumerate(plans):
        L = float(rng.uniform(0.5, 2.0))
        span = 2.0 * 4.9e-3 * (npts - 1) / L
        ctr = rng.uniform(-1.0, 1.0, T)
        lo, hi = ctr - span / 2, ctr + span / 2
        J = int(rng.integers(1, 13))
        pts = rng.uniform(lo - span, hi + span, (J, T))
        vals = rng.uniform(0.0, 2.0, J)
        s = mk(pts, vals, lipschitz=L, monotone=bool(i % 2))
        rep = solve_robust(s, RobustProblem(Z=Polyhedron(dim=T, lo=lo, hi=hi)))
        axes = [np.linspace(lo[t], hi[t], npts) for t in range(T)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, T)
        best = max(eval_psi_milp(s, g) for g in grid)
        assert abs(rep.psi_star - best) <= 5e-3
    assert time.monotonic() - t0 <= 300.0


def test_criterion_5_interpolates_lipschitz_quasiconcave_data():
    # f = min of monotone affine pieces with l1 slope norms <= 1:
    # concave, nondecreasing, 1-Lipschitz in the sup norm, so the
    # envelope built from its samples must reproduce them exactly
    rng = np.random.default_rng(2005)
    A = np.array([[0.6, 0.4], [0.2, 0.3], [1.0, 0.0]])
    b = np.array([0.5, 1.2, 0.9])
    pts = rng.uniform(-1.5, 1.5, (50, 2))
    vals = np.min(pts @ A.T + b, axis=1)
    s = mk(pts, vals, lipschitz=1.0, monotone=True)
    for p, v in zip(pts, vals):
        assert abs(eval_psi(s, p).value - v) <= 1e-6


def test_criterion_6_target_representation_and_cost_suite():
    t0 = time.monotonic()
    rng = np.random.default_rng(2006)
    worst = 0.0
    for _ in range(300):
        s = rand_sample(rng, monotone=True)
        x = rng.uniform(-3.0, 3.0, s.dim)
        worst = max(worst,
                    abs(eval_target_representation(s, x) - eval_psi(s, x).value))
    assert worst <= 1e-5
    # cost-function suite, each property at 100 sampled points
    rng = np.random.default_rng(2106)
    fams = [AcceptanceFamily(rand_sample(rng, monotone=True,
                                         J=int(rng.integers(2, 9))))
            for _ in range(10)]
    for k in range(100):
        fam = fams[k % len(fams)]
        d, size = fam.sample.dim, fam.sample.size
        j = 1 + k % size
        x = rng.uniform(-2.0, 2.0, d)
        m = eval_mu(fam, j, x)
        beta = float(rng.uniform(-1.0, 1.0))
        assert eval_mu(fam, j, x + beta) == pytest.approx(m - beta, abs=1e-8)
        assert eval_mu(fam, j, x + rng.uniform(0.0, 1.0, d)) <= m + 1e-8
        y = rng.uniform(-2.0, 2.0, d)
        lam = float(rng.uniform())
        assert eval_mu(fam, j, lam * x + (1 - lam) * y) \
            <= lam * m + (1 - lam) * eval_mu(fam, j, y) + 1e-8
        assert eval_mu(fam, j, np.zeros(d)) == pytest.approx(0.0, abs=1e-8)
        # the family is nested only after shifting each cost back to a
        # common hull ordering; raw costs can cross (see the pinned
        # counterexample in test_aspirational.py)
        aligned = [eval_mu(fam, jj, x) - fam.shifts[jj - 1]
                   for jj in range(1, size + 1)]
        assert np.all(np.diff(aligned) <= 1e-8)
    # the one-dimensional worked family keeps the raw ordering as well
    fam1 = AcceptanceFamily(mk([[2.0], [0.0]], [4.0, 2.0],
                               lipschitz=2.0, monotone=True))
    for x in np.linspace(-3.0, 3.0, 100):
        assert eval_mu(fam1, 1, np.array([x])) \
            >= eval_mu(fam1, 2, np.array([x])) - 1e-8
    assert time.monotonic() - t0 <= 120.0


def test_criterion_7_group_invariant_envelope():
    t0 = time.monotonic()
    rng = np.random.default_rng(2007)
    checked = 0
    for M, K in ((2, 1), (2, 2), (3, 1), (3, 2)):
        shape = GroupShape(groups=M, group_size=K)
        N = M * K
        for _ in range(50):
            J = int(rng.integers(1, 7))
            pts = rng.uniform(-1.5, 1.5, (J, N))
            vals = rng.uniform(0.0, 2.0, J)
            s = mk(pts, vals, lipschitz=float(rng.uniform(0.3, 2.0)),
                   monotone=True)
            x = rng.uniform(-2.0, 2.0, N)
            v = eval_psi_perm(s, shape, x).value
            for sig in itertools.permutations(range(M)):
                assert eval_psi_perm(s, shape, permute_groups(x, shape, sig)) \
                    .value == pytest.approx(v, abs=1e-7)
            # invariance shrinks the majorant family, so the symmetric
            # envelope sits weakly above the plain one
            assert v >= eval_psi(s, x).value - 1e-9
            assert abs(v - perm_oracle(s, shape, x)) <= 1e-5
            checked += 1
    assert checked == 200
    # the assignment relaxation is exact: its value equals the brute
    # minimum over group permutations
    rng = np.random.default_rng(2107)
    for M in (2, 3, 4):
        for K in (1, 2):
            shape = GroupShape(groups=M, group_size=K)
            for _ in range(10):
                xi = rng.uniform(-1.0, 1.0, M * K)
                th = rng.uniform(-1.0, 1.0, M * K)
                assert assignment_lp_value(xi, th, shape) == pytest.approx(
                    min_permuted_inner(xi, th, shape), abs=1e-9)
    assert time.monotonic() - t0 <= 180.0


def test_criterion_8_production_benchmark_desk_scale():
    t0 = time.monotonic()
    cd = CobbDouglas()
    rows = run_gap_experiment(cd)  # J in {32, 128}, 20 reps, L = 0.30
    env = {r.J: r.mean for r in rows if r.method == "envelope"}
    pc = {r.J: r.mean for r in rows if r.method == "piecewise_constant"}
    assert env[32] <= pc[32] + 1e-12
    assert env[128] <= pc[128] + 1e-12
    assert env[128] < env[32]
    l1 = {}
    for J in (32, 512):
        pts, vals = _draw_sample(cd, J, 0, 0)
        s = mk(pts, vals, lipschitz=0.30)
        l1[J] = l1_error(cd, lambda p, s=s: eval_psi(s, p).value, 25)
    assert l1[512] < l1[32]
    assert abs(estimate_lipschitz(cd) - 0.20) <= 0.01
    assert time.monotonic() - t0 <= 600.0


def test_criterion_9_level_function_agreement():
    t0 = time.monotonic()
    cd = CobbDouglas()
    eps = 1e-6
    # 24 mixed small instances: the cutting-plane value must match the
    # binary-search optimum on monotone production-style data and on
    # small non-monotone clouds alike
    for i in range(24):
        rng = np.random.default_rng(100 + i)
        if i % 2 == 0:
            J = (8, 16, 32)[(i // 2) % 3]
            lo = np.array([0.5, 0.5])
            hi = np.array([10.0, 10.0])
            pts = rng.uniform(lo, hi, size=(J, 2))
            vals = cobb_value(cd, pts)
            L = (0.30, 1.0)[(i // 6) % 2]
            mono = True
        else:
            J = int(rng.integers(6, 13))
            ctr = rng.uniform(-1.0, 1.0, 2)
            lo, hi = ctr - 0.75, ctr + 0.75
            pts = rng.uniform(lo - 0.25, hi + 0.25, size=(J, 2))
            vals = rng.uniform(0.0, 2.0, J)
            L = float(rng.uniform(0.5, 2.0))
            mono = False
        s = mk(pts, vals, lipschitz=L, monotone=mono)
        dom = Polyhedron(dim=2, lo=lo, hi=hi)
        res = solve_level_function(s, dom, eps=eps)
        ref = solve_robust(s, RobustProblem(Z=dom))
        assert res.converged
        assert abs(res.value - ref.psi_star) <= eps + 1e-5
    # 6 instances at J = 64: every cutting-plane iteration pays one
    # mixed-binary solve, so across instances the method spends far more
    # subproblems than the log2(J) probes of binary search; the totals
    # mirror that per-J average (individual easy draws can converge in
    # fewer cuts, which is why the claim is about the trend)
    milps = lps = 0
    lo = np.array([0.5, 0.5])
    hi = np.array([10.0, 10.0])
    dom = Polyhedron(dim=2, lo=lo, hi=hi)
    for seed in range(6):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(lo, hi, size=(64, 2))
        vals = cobb_value(cd, pts)
        s = mk(pts, vals, lipschitz=1.0, monotone=True)
        res = solve_level_function(s, dom, eps=eps)
        ref = solve_robust(s, RobustProblem(Z=dom))
        assert abs(res.value - ref.psi_star) <= eps + 1e-5
        milps += res.milp_solves
        lps += ref.subproblem_count
    assert milps > lps
    assert time.monotonic() - t0 <= 300.0
