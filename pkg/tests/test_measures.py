import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats
from scipy.special import logsumexp

from race_sampler.distributions import Rng
from race_sampler.measures import (
    NEG_INF,
    AtomSet,
    ContractViolation,
    CountingMeasure,
    FunctionalProblem,
    GaussianMeasure,
    HalfOpenBox,
    Interval,
    LebesgueMeasure,
    SpinCountingMeasure,
    SpinSubcube,
    log_add,
    log_sub,
    log_sum,
    region_volume_check,
    split_box_widest,
)
from race_sampler.problems import make_clutter

finite = st.floats(min_value=-700, max_value=700, allow_nan=False)


# log-domain helpers

def test_log_sum_examples():
    assert log_sum([0.0, 0.0]) == pytest.approx(math.log(2))
    assert log_sum([NEG_INF]) == NEG_INF
    assert log_sum([]) == NEG_INF
    assert log_sum([-1000.0, -1000.0]) == pytest.approx(-1000 + math.log(2))


@given(st.lists(finite, min_size=1, max_size=20))
def test_log_sum_matches_scipy(values):
    assert log_sum(values) == pytest.approx(float(logsumexp(values)), rel=1e-12, abs=1e-12)


@given(finite, finite)
def test_log_add_commutes_and_matches_numpy(a, b):
    assert log_add(a, b) == log_add(b, a)
    assert log_add(a, b) == pytest.approx(float(np.logaddexp(a, b)), rel=1e-12, abs=1e-12)


@given(finite)
def test_log_add_identity(a):
    assert log_add(a, NEG_INF) == a
    assert log_sub(a, NEG_INF) == a
    assert log_sub(a, a) == NEG_INF


@given(finite, st.floats(min_value=1e-6, max_value=50))
def test_log_sub_inverts_log_add(a, gap):
    b = a - gap
    assert log_sub(log_add(a, b), b) == pytest.approx(a, rel=1e-9, abs=1e-9)


def test_log_sub_rejects_larger_subtrahend():
    with pytest.raises(ValueError):
        log_sub(0.0, 1.0)


# regions

def test_malformed_regions_raise():
    with pytest.raises(ContractViolation):
        HalfOpenBox((1.0,), (0.0,))
    with pytest.raises(ContractViolation):
        Interval(2.0, 2.0)
    with pytest.raises(ContractViolation):
        SpinSubcube(3, ((5, 1),))
    with pytest.raises(ContractViolation):
        SpinSubcube(3, ((0, 2),))


def test_box_is_half_open():
    box = HalfOpenBox((0.0, 0.0), (1.0, 1.0))
    assert box.contains(np.array([1.0, 1.0]))
    assert not box.contains(np.array([0.0, 0.5]))


def test_interval_split_volume_check():
    window = HalfOpenBox((0.0,), (1.0,))
    prob = FunctionalProblem(LebesgueMeasure(window), lambda x: 0.0, lambda r: 0.0, split_box_widest)
    parts = split_box_widest(window, np.array([0.5]))
    assert parts == [HalfOpenBox((0.0,), (0.5,)), HalfOpenBox((0.5,), (1.0,))]
    assert region_volume_check(prob, window, parts, rng=Rng(0))
    # overlapping parts fail the disjointness probe
    assert not region_volume_check(prob, window, [window, HalfOpenBox((0.5,), (1.0,))], rng=Rng(0))


def test_spin_subcube_split_counts():
    q = SpinCountingMeasure(3)
    root = SpinSubcube(3)
    parts = [root.with_fixed(0, -1), root.with_fixed(0, 1)]
    assert [math.exp(q.log_mass(p)) for p in parts] == pytest.approx([4, 4])
    prob = FunctionalProblem(q, lambda x: 0.0, lambda r: 0.0, lambda r, x: parts)
    assert region_volume_check(prob, root, parts, rng=Rng(1))
    assert len(q.atoms(parts[0])) == 4


def test_clutter_box_halves_match_quadrature():
    prob = make_clutter(dim=2)
    q = prob.proposal
    box = HalfOpenBox((-1.0, -math.inf), (3.0, 2.0))
    parts = prob.split(box, np.array([0.5, 0.0]))
    assert len(parts) == 2
    for part in parts + [box]:
        quad = 1.0
        for a, b in zip(part.lo, part.hi):
            quad *= integrate.quad(lambda v: math.exp(-v * v / 8), a, b)[0]
        assert math.exp(q.log_mass(part)) == pytest.approx(quad, rel=1e-8)
    assert region_volume_check(prob, box, parts, rng=Rng(2))


# measures

def test_counting_measure():
    q = CountingMeasure(4)
    assert q.log_mass(q.root()) == pytest.approx(math.log(4))
    assert q.log_mass(AtomSet(frozenset({1, 3}))) == pytest.approx(math.log(2))
    rng = Rng(0)
    assert {q.sample_in(AtomSet(frozenset({2})), rng) for _ in range(10)} == {2}


def test_gaussian_mass_and_tails():
    q = GaussianMeasure(1)
    assert math.exp(q.log_mass(q.root())) == pytest.approx(math.sqrt(8 * math.pi))
    # far tail keeps relative accuracy instead of underflowing
    lm = q.log_mass(Interval(80.0, math.inf))
    ref = 0.5 * math.log(8 * math.pi) + stats.norm.logsf(40.0)
    assert lm == pytest.approx(ref, rel=1e-10)
    rng = Rng(3)
    for a, b in ((80.0, math.inf), (-math.inf, -60.0), (10.0, 10.5), (-0.1, 0.1)):
        for _ in range(50):
            x = q.sample_in(Interval(a, b), rng)[0]
            assert a < x <= b


def test_gaussian_truncated_sampler_law():
    q = GaussianMeasure(1)
    rng = Rng(4)
    xs = [q.sample_in(Interval(1.0, 5.0), rng)[0] for _ in range(5000)]
    ref = stats.truncnorm(0.5, 2.5, scale=2.0)
    assert stats.kstest(xs, ref.cdf).pvalue > 1e-3


def test_support_mismatch_is_a_contract_violation():
    q = LebesgueMeasure(HalfOpenBox((0.0,), (1.0,)))
    prob = FunctionalProblem(q, lambda x: 0.0, lambda r: 0.0, split_box_widest)
    with pytest.raises(ContractViolation):
        prob.log_ratio(np.array([2.0]))


def test_split_on_boundary_does_not_refine():
    box = HalfOpenBox((0.0,), (1.0,))
    assert split_box_widest(box, np.array([1.0])) == [box]
    assert split_box_widest(Interval(0.0, 1.0), np.array([0.0])) == [Interval(0.0, 1.0)]


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_split_box_partitions(x0, x1):
    box = HalfOpenBox((-4.0, -4.0), (4.0, 4.0))
    parts = split_box_widest(box, np.array([x0, x1]))
    q = LebesgueMeasure(box)
    total = sum(math.exp(q.log_mass(p)) for p in parts)
    assert total == pytest.approx(64.0)
