"""Goodness-of-fit helpers returning uniform StatReport records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

ALPHA = 1e-3
RETRIES = 3


@dataclass
class StatReport:
    name: str
    statistic: float
    p_value: float | None
    passed: bool
    sizes: tuple = ()
    detail: str = ""

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")

    def line(self) -> str:
        p = "-" if self.p_value is None else f"{self.p_value:.4g}"
        verdict = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{verdict}  {self.name:<48s} stat={self.statistic:.4g} p={p} n={self.sizes}{extra}"


def _nonempty(*samples):
    for s in samples:
        if len(s) == 0:
            raise ValueError("empty sample")


def _merge_bins(observed, expected, min_expected=5.0):
    """Merge adjacent bins (in order) until each expected count is >= min_expected."""
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return np.array(obs_out), np.array(exp_out)


def chi2_gof(observed: Sequence[float], probs: Sequence[float], name: str = "chi2 gof",
             alpha: float = ALPHA) -> StatReport:
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(probs, dtype=float)
    _nonempty(observed)
    n = observed.sum()
    if n == 0:
        raise ValueError("empty sample")
    obs, exp = _merge_bins(observed, n * probs / probs.sum())
    if obs.size < 2:
        return StatReport(name, 0.0, 1.0, True, (int(n),), "single bin")
    stat, p = stats.chisquare(obs, exp)
    return StatReport(name, float(stat), float(p), bool(p > alpha), (int(n),))


def chi2_homogeneity(a: Sequence[int], b: Sequence[int], name: str = "chi2 two-sample",
                     alpha: float = ALPHA) -> StatReport:
    """Two-sample chi-square on discrete values; sparse tail values are pooled."""
    _nonempty(a, b)
    a, b = np.asarray(a), np.asarray(b)
    values = np.union1d(a, b)
    ca = np.array([np.sum(a == v) for v in values], dtype=float)
    cb = np.array([np.sum(b == v) for v in values], dtype=float)
    # pool from the right until every column has >= 5 expected in both rows
    cols_a, cols_b = [], []
    acc_a = acc_b = 0.0
    for x, y in zip(ca, cb):
        acc_a += x
        acc_b += y
        tot = acc_a + acc_b
        if tot * min(a.size, b.size) / (a.size + b.size) >= 5:
            cols_a.append(acc_a)
            cols_b.append(acc_b)
            acc_a = acc_b = 0.0
    if acc_a + acc_b > 0:
        if cols_a:
            cols_a[-1] += acc_a
            cols_b[-1] += acc_b
        else:
            cols_a.append(acc_a)
            cols_b.append(acc_b)
    if len(cols_a) < 2:
        return StatReport(name, 0.0, 1.0, True, (a.size, b.size), "single bin")
    stat, p, _, _ = stats.chi2_contingency(np.array([cols_a, cols_b]), correction=False)
    return StatReport(name, float(stat), float(p), bool(p > alpha), (a.size, b.size))


def chi2_independence(table, name: str = "chi2 independence", alpha: float = ALPHA) -> StatReport:
    table = np.asarray(table, dtype=float)
    table = table[:, table.sum(axis=0) > 0]
    table = table[table.sum(axis=1) > 0]
    stat, p, _, _ = stats.chi2_contingency(table, correction=False)
    return StatReport(name, float(stat), float(p), bool(p > alpha), (int(table.sum()),))


def ks_test(samples: Sequence[float], cdf: Callable | str, args=(), name: str = "ks",
            alpha: float = ALPHA) -> StatReport:
    _nonempty(samples)
    stat, p = stats.kstest(np.asarray(samples, dtype=float), cdf, args=args)
    return StatReport(name, float(stat), float(p), bool(p > alpha), (len(samples),))


def ks_two_sample(a: Sequence[float], b: Sequence[float], name: str = "ks two-sample",
                  alpha: float = ALPHA) -> StatReport:
    _nonempty(a, b)
    stat, p = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return StatReport(name, float(stat), float(p), bool(p > alpha), (len(a), len(b)))


def mean_within(samples: Sequence[float], target: float, n_se: float = 3.0,
                name: str = "mean") -> StatReport:
    """|mean - target| <= n_se standard errors."""
    _nonempty(samples)
    x = np.asarray(samples, dtype=float)
    se = x.std(ddof=1) / math.sqrt(x.size)
    z = (x.mean() - target) / se if se > 0 else (0.0 if x.mean() == target else math.inf)
    return StatReport(name, float(z), None, bool(abs(z) <= n_se), (x.size,),
                      f"mean={x.mean():.6g} target={target:.6g} se={se:.3g}")


def survival_check(k_samples: Sequence[int], expected: Callable, ks=range(1, 11),
                   name: str = "survival", n_se: float = 3.0, one_sided: bool = False) -> StatReport:
    """Compare empirical P(K > k) with expected(k) within n_se binomial SEs.

    ``one_sided`` only flags excess over the expected curve (a tail bound).
    Reports the worst margin in SE units.
    """
    _nonempty(k_samples)
    k_arr = np.asarray(k_samples)
    n = k_arr.size
    worst = math.inf
    for k in ks:
        p_hat = float(np.mean(k_arr > k))
        p0 = float(expected(k))
        se = math.sqrt(max(p0 * (1 - p0), 1.0 / n) / n)
        gap = (p0 + n_se * se) - p_hat
        if not one_sided:
            gap = min(gap, p_hat - (p0 - n_se * se))
        worst = min(worst, gap / se)
    return StatReport(name, float(worst), None, bool(worst >= 0), (n,), f"worst margin {worst:.3g} SE")


def geom_tail_check(k_samples: Sequence[int], rho: float, ks=range(1, 11),
                    name: str = "geometric tail", one_sided: bool = False) -> StatReport:
    """Empirical survival of K against (1 - rho)^k with 3-SE bands."""
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return survival_check(k_samples, lambda k: (1 - rho) ** k, ks, name, one_sided=one_sided)


def with_retries(check: Callable[[int], StatReport], retries: int = RETRIES) -> StatReport:
    """Run ``check(attempt)``; on failure rerun with fresh attempts, up to ``retries`` times."""
    report = check(0)
    attempt = 0
    while not report.passed and attempt < retries:
        attempt += 1
        report = check(attempt)
    if attempt:
        report.detail = (report.detail + f" (attempt {attempt + 1})").strip()
    return report
