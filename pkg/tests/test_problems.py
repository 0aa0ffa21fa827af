import math

import numpy as np
import pytest

from race_sampler.distributions import Rng, sample_gumbel
from race_sampler.harness import checks
from race_sampler.harness.stats import chi2_gof
from race_sampler.measures import AtomSet, HalfOpenBox, Interval, SpinSubcube
from race_sampler.problems import (
    CLUTTER_LEVELS,
    build_problem,
    clutter_dataset,
    dataset_csv,
    make_clutter,
    make_discrete,
    make_ising,
    make_regression,
    regression_dataset,
)


def test_discrete_probabilities_and_errors():
    assert make_discrete([1, 1]).probabilities() == pytest.approx([0.5, 0.5])
    assert make_discrete([1, 2, 3]).probabilities() == pytest.approx([1 / 6, 1 / 3, 1 / 2])
    for bad in ([1, 0], [1, -2], []):
        with pytest.raises(ValueError):
            make_discrete(bad)


def test_gumbel_max_over_masses():
    prob = make_discrete([1, 2, 3])
    rng = Rng(0)
    wins = [int(np.argmax([prob.log_f(i) + sample_gumbel(0.0, rng) for i in range(3)])) for _ in range(30_000)]
    assert chi2_gof(np.bincount(wins, minlength=3), prob.probabilities()).passed


def test_discrete_split_and_bound():
    prob = make_discrete([1, 2, 3, 4])
    root = prob.root
    assert prob.log_bound(root) == pytest.approx(math.log(4))
    parts = prob.split(root, 2)
    assert parts == [AtomSet(frozenset({2})), AtomSet(frozenset({0, 1, 3}))]
    assert prob.log_bound(parts[1]) == pytest.approx(math.log(4))
    assert prob.split(parts[0], 2) == [parts[0]]


def test_clutter_dataset_and_errors():
    data = clutter_dataset(3)
    assert data.shape == (6, 3)
    assert list(data[:, 0]) == list(CLUTTER_LEVELS)
    assert np.all(data[:, 0:1] == data)
    with pytest.raises(ValueError):
        make_clutter(data, dim=2)


def test_clutter_bound_at_data_point_is_term_max():
    prob = make_clutter(dim=1)
    # a box holding every data point: each term sits at its own peak
    whole = Interval(-10.0, 10.0)
    bound = prob.log_bound(whole)
    expected = float(np.sum(np.logaddexp(prob._log_inlier, prob._log_outlier)))
    assert bound == pytest.approx(expected)
    # a box around a single point clamps everything else to the box edge
    box = Interval(2.5, 3.5)
    theta = np.array([3.0])
    assert prob.log_ratio(theta) <= prob.log_bound(box) + 1e-12


def test_regression_dataset_shape():
    data = regression_dataset(10, Rng(0))
    assert data.shape == (10, 2)
    assert np.array_equal(data[5:, 0], data[:5, 0])
    assert np.array_equal(data[5:, 1], -data[:5, 1])
    ratio = data[:5, 1] / data[:5, 0]
    assert np.all(np.abs(ratio - 2.0) < 2.0)
    with pytest.raises(ValueError):
        regression_dataset(7, Rng(0))


def test_regression_errors_and_peak_bound():
    with pytest.raises(ValueError):
        make_regression([[0.0, 1.0], [1.0, 2.0]])
    prob = make_regression([[1.0, 2.0]])
    # peak y/x = 2 inside the interval: the Cauchy term reaches its max of 1
    assert prob.log_bound(Interval(0.0, 5.0)) == pytest.approx(0.0)
    # peak outside: value at the nearest end
    assert prob.log_bound(Interval(3.0, 5.0)) == pytest.approx(-math.log1p(1.0))


def test_ising_basics():
    with pytest.raises(ValueError):
        make_ising(1)
    prob = make_ising(4, Rng(5))
    x = np.array([1.0, -1.0, 1.0, 1.0])
    point = SpinSubcube(4, tuple((i, int(s)) for i, s in enumerate(x)))
    assert prob.log_bound(point) == pytest.approx(prob.log_f(x))
    assert prob.split(point, x) == [point]
    parts = prob.split(SpinSubcube(4), x)
    assert len(parts) == 2 and all(len(p.fixed) == 1 for p in parts)
    # log f by direct double loop
    direct = sum(prob.fields[i] * x[i] for i in range(4))
    direct += sum(prob.weights[i, j] * x[i] * x[j] for i in range(4) for j in range(i + 1, 4))
    assert prob.log_f(x) == pytest.approx(direct)


def test_ising_bound_beats_brute_force():
    rng = Rng(6)
    for _ in range(30):
        n = 2 + rng.randbelow(8)
        prob = make_ising(n, rng.split())
        region = SpinSubcube(n)
        for i in range(n):
            if rng.uniform01() < 0.4:
                region = region.with_fixed(i, -1 if rng.uniform01() < 0.5 else 1)
        assert prob.log_bound(region) >= checks.brute_force_max(prob, region) - 1e-6


@pytest.mark.parametrize("prob", checks.default_problems(0), ids=lambda p: p.name)
def test_split_and_bound_contracts(prob):
    assert checks.check_split_contract(prob, 1, 200).passed
    assert checks.check_bound_soundness(prob, 2, 2_000).passed


def test_corrupt_bound_is_flagged():
    assert not checks.check_bound_soundness(make_discrete([1, 2, 3, 4], bound_scale=0.5), 3, 500).passed


def test_build_problem_and_csv():
    assert build_problem("discrete").masses == [1, 2, 3, 4]
    reg = build_problem("regression", n_data=4, data_seed=3)
    assert np.array_equal(reg.data, build_problem("regression", n_data=4, data_seed=3).data)
    assert dataset_csv(reg).splitlines()[0] == "x,y"
    assert len(dataset_csv(build_problem("ising", n_spins=3)).splitlines()) == 1 + 3 + 3
    with pytest.raises(KeyError):
        build_problem("nope")


def test_box_regions_resolve():
    prob = make_clutter(dim=2)
    assert prob.root == HalfOpenBox.full(2)
    assert math.isfinite(prob.log_bound(prob.root))
