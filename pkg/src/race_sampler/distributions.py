"""Seeded primitive samplers: exponential, Poisson, Gumbel, truncated Gumbel,
categorical-by-log-weight, and the minimum of an exponential race.

Exponential draws are returned as log-times so they compose with the
log-domain race machinery without overflow.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .measures import NEG_INF, log_add, log_sum

_BLOCK = 512


class Rng:
    """Seedable, splittable PCG64 stream with an open-interval uniform.

    Draws are pulled from numpy in blocks; the stream is still a pure
    function of the seed.
    """

    def __init__(self, seed=None, *, _seq: np.random.SeedSequence | None = None):
        self._seq = _seq if _seq is not None else np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))
        self._buf: list = []
        self._pos = 0

    @property
    def entropy(self):
        return self._seq.entropy

    def uniform01(self) -> float:
        """Uniform on the open interval (0, 1)."""
        while True:
            if self._pos >= len(self._buf):
                self._buf = self._gen.random(_BLOCK).tolist()
                self._pos = 0
            u = self._buf[self._pos]
            self._pos += 1
            if u > 0.0:
                return u

    def randbelow(self, n: int) -> int:
        return min(int(self.uniform01() * n), n - 1)

    def split(self) -> "Rng":
        """An independent child stream; the k-th child of a given seed is fixed."""
        return Rng(_seq=self._seq.spawn(1)[0])

    def spawn(self, k: int) -> list:
        return [Rng(_seq=s) for s in self._seq.spawn(k)]


def as_rng(rng_or_seed) -> Rng:
    return rng_or_seed if isinstance(rng_or_seed, Rng) else Rng(rng_or_seed)


def std_exp(rng: Rng) -> float:
    return -math.log(rng.uniform01())


def log_exp_time(log_rate: float, rng: Rng) -> float:
    """log of an Exp(exp(log_rate)) draw."""
    if log_rate == NEG_INF:
        return math.inf
    return math.log(std_exp(rng)) - log_rate


def sample_exp(rate: float, rng: Rng) -> float:
    """log E for E ~ Exp(rate); rate 0 gives +inf."""
    if rate < 0 or math.isnan(rate):
        raise ValueError(f"exponential rate must be >= 0, got {rate}")
    if rate == 0:
        return math.inf
    return math.log(std_exp(rng)) - math.log(rate)


# ---------------------------------------------------------------------------
# Poisson

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _poisson_inversion(mean: float, rng: Rng) -> int:
    u = rng.uniform01()
    k = 0
    p = math.exp(-mean)
    cdf = p
    while u > cdf:
        k += 1
        p *= mean / k
        cdf += p
        if p == 0.0 and cdf < u:
            # rounding left a sliver of mass; the tail is beyond reach
            break
    return k


def _poisson_ptrs(mean: float, rng: Rng) -> int:
    # transformed rejection with squeeze (Hormann 1993)
    slam = math.sqrt(mean)
    loglam = math.log(mean)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2)
    while True:
        u = rng.uniform01() - 0.5
        v = rng.uniform01()
        us = 0.5 - abs(u)
        k = math.floor((2 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= v_r:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        lhs = math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b)
        rhs = -mean + k * loglam - math.lgamma(k + 1)
        if lhs <= rhs:
            return int(k)


def sample_poisson(mean: float, rng: Rng) -> int:
    if not (mean >= 0) or math.isinf(mean):
        raise ValueError(f"Poisson mean must be finite and >= 0, got {mean}")
    if mean == 0:
        return 0
    if mean < 30:
        return _poisson_inversion(mean, rng)
    return _poisson_ptrs(mean, rng)


# ---------------------------------------------------------------------------
# Gumbel


def sample_gumbel(location: float, rng: Rng) -> float:
    if location == NEG_INF:
        return NEG_INF
    return location - math.log(std_exp(rng))


def sample_trunc_gumbel(location: float, upper: float, rng: Rng) -> float:
    """Gumbel(location) conditioned on being <= upper."""
    if location == NEG_INF:
        return NEG_INF
    # G = loc - log(exp(loc - upper) + E), E ~ Exp(1)
    return location - log_add(location - upper, math.log(std_exp(rng)))


def min_exp_race(rates: Sequence[float], rng: Rng) -> tuple:
    """Draw Exp(rate_j) for every j; return (min, argmin)."""
    if any(r < 0 for r in rates):
        raise ValueError("rates must be nonnegative")
    if not any(r > 0 for r in rates):
        raise ValueError("need at least one positive rate")
    best, arg = math.inf, -1
    for j, r in enumerate(rates):
        e = std_exp(rng) / r if r > 0 else math.inf
        if e < best:
            best, arg = e, j
    return best, arg


def categorical_with_total(weights: Sequence[float], rng: Rng) -> tuple:
    """(k, log sum exp(w)) with k ~ exp(w_k) / sum(exp(w)); vectorised, one uniform."""
    w = np.asarray(weights, dtype=float)
    m = w.max()
    if m == NEG_INF:
        raise ValueError("all categorical weights are log(0)")
    cum = np.cumsum(np.exp(w - m))
    k = int(np.searchsorted(cum, rng.uniform01() * cum[-1], side="right"))
    k = min(k, len(w) - 1)
    while w[k] == NEG_INF:  # only reachable through round-off at the top end
        k -= 1
    return k, float(m + math.log(cum[-1]))


def sample_categorical_log(weights: Sequence[float], rng: Rng) -> int:
    """Index k with probability exp(w_k) / sum(exp(w)), by inverse CDF."""
    if len(weights) > 32:
        return categorical_with_total(weights, rng)[0]
    total = log_sum(weights)
    if total == NEG_INF:
        raise ValueError("all categorical weights are log(0)")
    target = math.log(rng.uniform01())
    acc = NEG_INF
    last = 0
    for k, w in enumerate(weights):
        if w == NEG_INF:
            continue
        acc = log_add(acc, w - total)
        last = k
        if target < acc:
            return k
    return last
