import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from race_sampler.distributions import Rng
from race_sampler.harness import checks
from race_sampler.lp import LpModel, ising_relaxation, lp_solve
from race_sampler.measures import SpinSubcube
from race_sampler.problems import make_ising


def test_box_example():
    sol = lp_solve(LpModel([1.0, 1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0]))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(1.0)


def test_forced_point():
    # x1 + x2 = 1.5 and x1 - x2 = 0.5 pin x = (1, 0.5)
    sol = lp_solve(LpModel([2.0, -3.0], a_eq=[[1, 1], [1, -1]], b_eq=[1.5, 0.5]))
    assert sol.status == "optimal"
    assert sol.x == pytest.approx([1.0, 0.5])
    assert sol.value == pytest.approx(2.0 - 1.5)


def test_infeasible_and_unbounded_statuses():
    assert lp_solve(LpModel([1.0], a_eq=[[1.0]], b_eq=[2.0])).status == "infeasible"
    assert lp_solve(LpModel([1.0, 0.0], a_ub=[[-1.0, 1.0]], b_ub=[0.0], upper=[np.inf, np.inf])).status == "unbounded"


def test_redundant_equalities():
    sol = lp_solve(LpModel([1.0, 2.0], a_eq=[[1, 1], [2, 2]], b_eq=[1.0, 2.0]))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(2.0)


def test_minimisation_and_negative_rhs():
    sol = lp_solve(LpModel([1.0, 1.0], a_ub=[[-1.0, -1.0]], b_ub=[-0.5], maximize=False))
    assert sol.value == pytest.approx(0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_random_lps_match_highs(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 6)), int(rng.integers(1, 5))
    c = rng.normal(size=n)
    a = rng.normal(size=(m, n))
    b = rng.uniform(0.1, 2.0, size=m)
    ours = lp_solve(LpModel(c, a_ub=a, b_ub=b))
    ref = linprog(-c, A_ub=a, b_ub=b, bounds=[(0, 1)] * n, method="highs")
    assert ours.status == "optimal"
    assert ours.value == pytest.approx(-ref.fun, abs=1e-9)
    assert np.all(a @ ours.x <= b + 1e-9)
    assert np.all((ours.x >= -1e-9) & (ours.x <= 1 + 1e-9))


def test_deterministic_basis():
    prob = make_ising(6, Rng(1))
    a = ising_relaxation(prob, SpinSubcube(6))
    b = ising_relaxation(prob, SpinSubcube(6))
    assert a[0] == b[0]
    assert np.array_equal(a[1], b[1])


def test_decoupled_pair():
    prob = make_ising(2, (np.array([0.7, -0.4]), np.zeros((2, 2))))
    value, _ = ising_relaxation(prob, SpinSubcube(2))
    assert value == pytest.approx(0.7 + 0.4)


def test_fully_fixed_is_exact():
    prob = make_ising(4, Rng(2))
    for spins in itertools.product((-1, 1), repeat=4):
        region = SpinSubcube(4, tuple(enumerate(spins)))
        assert ising_relaxation(prob, region)[0] == pytest.approx(prob.log_f(np.array(spins)), abs=1e-12)


def test_random_relaxations_vs_brute_force_and_reference():
    rng = Rng(3)
    for _ in range(50):
        n = 2 + rng.randbelow(7)
        prob = make_ising(n, rng.split())
        region = SpinSubcube(n)
        for i in range(n):
            if rng.uniform01() < 0.3:
                region = region.with_fixed(i, 1 if rng.uniform01() < 0.5 else -1)
        value, frac = ising_relaxation(prob, region)
        assert value >= checks.brute_force_max(prob, region) - 1e-6
        assert value == pytest.approx(checks.reference_relaxation(prob, region), abs=1e-6)
        assert np.all((frac >= -1e-9) & (frac <= 1 + 1e-9))


def test_lp_bound_group():
    assert all(r.passed for r in checks.check_lp_bound(4, 40))
