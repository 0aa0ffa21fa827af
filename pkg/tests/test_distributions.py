import math

import numpy as np
import pytest
from scipy import stats

from race_sampler.distributions import (
    Rng,
    categorical_with_total,
    min_exp_race,
    sample_categorical_log,
    sample_exp,
    sample_gumbel,
    sample_poisson,
    sample_trunc_gumbel,
)
from race_sampler.harness import checks
from race_sampler.harness.stats import chi2_gof
from race_sampler.measures import NEG_INF


class FixedRng(Rng):
    """Replays a fixed list of uniforms."""

    def __init__(self, values):
        super().__init__(0)
        self.values = list(values)

    def uniform01(self):
        return self.values.pop(0)


def test_rng_is_reproducible_and_open():
    a, b = Rng(42), Rng(42)
    xs = [a.uniform01() for _ in range(2000)]
    assert xs == [b.uniform01() for _ in range(2000)]
    assert all(0.0 < x < 1.0 for x in xs)
    c1, c2 = Rng(42).spawn(2)
    assert c1.uniform01() != c2.uniform01()
    assert Rng(7).split().uniform01() == Rng(7).split().uniform01()


def test_exp_rate_zero_and_inversion():
    assert sample_exp(0.0, Rng(0)) == math.inf
    assert sample_exp(1.0, FixedRng([math.exp(-1)])) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        sample_exp(-1.0, Rng(0))


def test_exp_mean():
    assert checks.check_exp_mean(1, 20_000).passed


def test_poisson_edge_cases():
    rng = Rng(0)
    assert all(sample_poisson(0.0, rng) == 0 for _ in range(100))
    for bad in (-1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            sample_poisson(bad, rng)


@pytest.mark.parametrize("mean", [0.3, 4.0, 29.5, 30.0, 250.0])
def test_poisson_law(mean):
    rng = Rng(int(mean * 10))
    draws = np.array([sample_poisson(mean, rng) for _ in range(20_000)])
    hi = int(stats.poisson.ppf(0.9999, mean)) + 1
    counts = np.bincount(np.minimum(draws, hi), minlength=hi + 1)
    probs = stats.poisson.pmf(np.arange(hi + 1), mean)
    probs[-1] += stats.poisson.sf(hi, mean)
    assert chi2_gof(counts, probs).passed


def test_poisson_additivity():
    assert checks.check_poisson_additivity(3, 30_000).passed


def test_gumbel_cases():
    assert sample_gumbel(NEG_INF, Rng(0)) == NEG_INF
    assert checks.check_gumbel_from_exp(4, 30_000).passed
    assert checks.check_gumbel_mean(5, 30_000).passed


def test_trunc_gumbel_boundaries():
    # U -> 1 means E -> 0, so G -> upper
    u = math.nextafter(1.0, 0.0)
    assert sample_trunc_gumbel(0.0, 1.5, FixedRng([u])) == pytest.approx(1.5, abs=1e-12)
    # upper = +inf is the plain Gumbel, draw for draw
    for s in range(20):
        assert sample_trunc_gumbel(0.3, math.inf, Rng(s)) == sample_gumbel(0.3, Rng(s))
    rng = Rng(1)
    assert all(sample_trunc_gumbel(2.0, -1.0, rng) <= -1.0 for _ in range(1000))


def test_trunc_gumbel_matches_rejection():
    assert checks.check_trunc_gumbel(6, 20_000).passed


def test_min_race_errors_and_law():
    with pytest.raises(ValueError):
        min_exp_race([0.0, 0.0], Rng(0))
    with pytest.raises(ValueError):
        min_exp_race([1.0, -1.0], Rng(0))
    assert all(r.passed for r in checks.check_min_race(7, 20_000))


def test_categorical():
    assert all(sample_categorical_log([NEG_INF, 0.3, NEG_INF], Rng(s)) == 1 for s in range(20))
    with pytest.raises(ValueError):
        sample_categorical_log([NEG_INF, NEG_INF], Rng(0))
    assert all(r.passed for r in checks.check_categorical(8, 20_000))


def test_vectorised_categorical_agrees():
    w = [math.log(v) for v in range(1, 41)] + [NEG_INF]
    k, total = categorical_with_total(w, Rng(0))
    assert total == pytest.approx(math.log(sum(range(1, 41))))
    rng = Rng(9)
    counts = np.bincount([sample_categorical_log(w, rng) for _ in range(40_000)], minlength=41)
    assert counts[-1] == 0
    assert chi2_gof(counts[:40], np.arange(1, 41)).passed


def test_max_stability_and_gibbs():
    assert checks.check_max_stability(10, 20_000).passed
    assert checks.check_argmax_gibbs(11, 20_000).passed
