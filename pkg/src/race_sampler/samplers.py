"""Exact samplers that return the first arrival of the race with measure P.

REJ thins a race with measure M Q; PER perturbs the times of a race with
measure Q and stops once T_{i+1}/M passes the best perturbed time; OS*
thins with a refined piecewise envelope; A* searches a space-partitioning
tree race best-first. All times are kept as logs.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass
from typing import Iterator, Sequence

from .distributions import Rng, categorical_with_total, log_exp_time, sample_categorical_log
from .measures import LOG_TOL, NEG_INF, ContractViolation, TargetProblem, log_add, log_sum
from .processes import Arrival

DEFAULT_MAX_ITER = 10 ** 6


class ProgressError(RuntimeError):
    """The sampler hit its iteration cap without terminating."""


@dataclass
class RunRecord:
    arrival: Arrival
    k_proposals: int
    k_bounds: int
    seed: object = None
    wallclock: float = 0.0

    @property
    def log_time(self) -> float:
        return self.arrival.log_time

    @property
    def location(self):
        return self.arrival.location


def _checked_ratio(problem: TargetProblem, x, log_m: float) -> float:
    ratio = problem.log_ratio(x)
    if ratio > log_m + LOG_TOL:
        raise ContractViolation(
            f"bound violated at {x!r}: log f - log g = {ratio} > log M = {log_m}")
    return ratio


def _global_bound(problem: TargetProblem) -> float:
    log_m = problem.log_bound(problem.root)
    if not math.isfinite(log_m):
        raise ValueError(f"global bound must be finite, got log M = {log_m}")
    return log_m


def _record(arrival, k, kb, rng, started):
    return RunRecord(arrival, k, kb, getattr(rng, "entropy", None), time.perf_counter() - started)


# ---------------------------------------------------------------------------
# REJ / PER


def rej_stream(problem: TargetProblem, rng: Rng) -> Iterator[Arrival]:
    """Accepted arrivals of REJ, one per acceptance."""
    log_m = _global_bound(problem)
    root = problem.root
    q = problem.proposal
    log_rate = log_m + q.log_mass(root)
    log_t = NEG_INF
    accepted = 0
    while True:
        log_t = log_add(log_t, log_exp_time(log_rate, rng))
        x = q.sample_in(root, rng)
        ratio = _checked_ratio(problem, x, log_m)
        if math.log(rng.uniform01()) < ratio - log_m:
            accepted += 1
            yield Arrival(log_t, x, accepted)


def rej_first(problem: TargetProblem, rng: Rng, max_iter: int = DEFAULT_MAX_ITER) -> RunRecord:
    return oracle_rej(problem, None, rng, max_iter=max_iter)


def per_stream(problem: TargetProblem, rng: Rng) -> Iterator[Arrival]:
    """Arrivals of the perturbed race in time order, via a min-queue of candidates."""
    log_m = _global_bound(problem)
    root = problem.root
    q = problem.proposal
    log_q = q.log_mass(root)
    tie = itertools.count()
    pending: list = []
    emitted = 0
    log_t = log_exp_time(log_q, rng)
    while True:
        x = q.sample_in(root, rng)
        ratio = _checked_ratio(problem, x, log_m)
        if ratio > NEG_INF:
            heapq.heappush(pending, (log_t - ratio, next(tie), x))
        log_t = log_add(log_t, log_exp_time(log_q, rng))
        while pending and log_t - log_m >= pending[0][0]:
            lt, _, x_best = heapq.heappop(pending)
            emitted += 1
            yield Arrival(lt, x_best, emitted)


def per_first(problem: TargetProblem, rng: Rng, max_iter: int = DEFAULT_MAX_ITER) -> RunRecord:
    return oracle_per(problem, None, rng, max_iter=max_iter)


def _schedule(problem, bound_schedule):
    if bound_schedule is None:
        log_m = _global_bound(problem)
        return lambda i: log_m
    logs = [math.log(m) for m in bound_schedule]
    if not logs:
        raise ValueError("empty bound schedule")
    if any(b > a for a, b in zip(logs, logs[1:])):
        raise ContractViolation("bound schedule must be nonincreasing")
    return lambda i: logs[min(i, len(logs)) - 1]


def oracle_rej(problem: TargetProblem, bound_schedule: Sequence[float] | None, rng: Rng,
               max_iter: int = DEFAULT_MAX_ITER) -> RunRecord:
    """REJ with bound M_i at iteration i (the last entry repeats)."""
    started = time.perf_counter()
    bound = _schedule(problem, bound_schedule)
    root = problem.root
    q = problem.proposal
    log_q = q.log_mass(root)
    log_t = NEG_INF
    for i in range(1, max_iter + 1):
        log_m = bound(i)
        log_t = log_add(log_t, log_exp_time(log_m + log_q, rng))
        x = q.sample_in(root, rng)
        ratio = _checked_ratio(problem, x, log_m)
        if math.log(rng.uniform01()) < ratio - log_m:
            return _record(Arrival(log_t, x, 1), i, 1, rng, started)
    raise ProgressError(f"REJ did not accept within {max_iter} proposals")


def oracle_per(problem: TargetProblem, bound_schedule: Sequence[float] | None, rng: Rng,
               max_iter: int = DEFAULT_MAX_ITER) -> RunRecord:
    """PER with bound M_i at iteration i; the running best is never discarded."""
    started = time.perf_counter()
    bound = _schedule(problem, bound_schedule)
    root = problem.root
    q = problem.proposal
    log_q = q.log_mass(root)
    best_t, best_x = math.inf, None
    log_t = log_exp_time(log_q, rng)
    for i in range(1, max_iter + 1):
        log_m = bound(i)
        x = q.sample_in(root, rng)
        ratio = _checked_ratio(problem, x, log_m)
        perturbed = log_t - ratio
        if perturbed < best_t:
            best_t, best_x = perturbed, x
        log_t = log_add(log_t, log_exp_time(log_q, rng))
        if log_t - log_m >= best_t:
            return _record(Arrival(best_t, best_x, 1), i, 1, rng, started)
    raise ProgressError(f"PER did not terminate within {max_iter} proposals")


# ---------------------------------------------------------------------------
# OS*


def osstar_first(problem: TargetProblem, rng: Rng, max_iter: int = DEFAULT_MAX_ITER) -> RunRecord:
    """Adaptive rejection over a refined partition, splitting the rejected cell."""
    started = time.perf_counter()
    q = problem.proposal
    root = problem.root
    regions = [root]
    log_qs = [q.log_mass(root)]
    log_ms = [problem.log_bound(root)]
    weights = [log_qs[0] + log_ms[0]]
    k_bounds = 1
    log_t = NEG_INF
    for i in range(1, max_iter + 1):
        k, log_total = categorical_with_total(weights, rng)
        b, log_m = regions[k], log_ms[k]
        x = q.sample_in(b, rng)
        log_t = log_add(log_t, log_exp_time(log_total, rng))
        ratio = _checked_ratio(problem, x, log_m)
        if math.log(rng.uniform01()) < ratio - log_m:
            return _record(Arrival(log_t, x, 1), i, k_bounds, rng, started)
        parts = []
        for c in problem.split(b, x):
            lq = q.log_mass(c)
            if lq > NEG_INF:
                parts.append((c, lq))
        if len(parts) < 2:
            continue
        del regions[k], log_qs[k], log_ms[k], weights[k]
        for c, lq in parts:
            lm = problem.log_bound(c)
            k_bounds += 1
            regions.append(c)
            log_qs.append(lq)
            log_ms.append(lm)
            weights.append(lq + lm)
    raise ProgressError(f"OS* did not accept within {max_iter} proposals")


# ---------------------------------------------------------------------------
# A*


class _AStar:
    """Shared state for A* sampling: lower-bound queue L and candidate queue U."""

    def __init__(self, problem: TargetProblem, rng: Rng, max_iter: int):
        self.problem = problem
        self.rng = rng
        self.max_iter = max_iter
        self.q = problem.proposal
        self.tie = itertools.count()
        self.lower: list = []  # (log T - log M(B), tie, log T, B, log Q(B), log M(B))
        self.upper: list = []  # (perturbed log T, tie, x)
        self.k = 0
        self.k_bounds = 0
        root = problem.root
        lq = self.q.log_mass(root)
        lm = self._bound(root)
        t1 = log_exp_time(lq, rng)
        self._push(t1, root, lq, lm)

    def _bound(self, region):
        self.k_bounds += 1
        return self.problem.log_bound(region)

    def _push(self, log_t, region, lq, lm):
        heapq.heappush(self.lower, (log_t - lm, next(self.tie), log_t, region, lq, lm))

    def min_lower(self):
        return self.lower[0][0] if self.lower else math.inf

    def min_upper(self):
        return self.upper[0][0] if self.upper else math.inf

    def step(self) -> None:
        if self.k >= self.max_iter:
            raise ProgressError(f"A* did not terminate within {self.max_iter} proposals")
        rng, q = self.rng, self.q
        _, _, log_t, b, lq, lm = heapq.heappop(self.lower)
        x = q.sample_in(b, rng)
        self.k += 1
        ratio = _checked_ratio(self.problem, x, lm)
        if ratio > NEG_INF:
            heapq.heappush(self.upper, (log_t - ratio, next(self.tie), x))
        log_t = log_add(log_t, log_exp_time(lq, rng))
        if min(self.min_lower(), log_t - lm) < self.min_upper():
            parts = []
            for c in self.problem.split(b, x):
                clq = q.log_mass(c)
                if clq > NEG_INF:
                    parts.append((c, clq))
            if len(parts) < 2:
                self._push(log_t, b, lq, lm)
                return
            while parts:
                j = sample_categorical_log([p[1] for p in parts], rng)
                c, clq = parts.pop(j)
                self._push(log_t, c, clq, self._bound(c))
                if parts:
                    log_t = log_add(log_t, log_exp_time(log_sum([p[1] for p in parts]), rng))
        else:
            self._push(log_t, b, lq, lm)

    def ready(self) -> bool:
        return bool(self.upper) and self.min_lower() >= self.min_upper()


def astar_first(problem: TargetProblem, rng: Rng, max_iter: int = DEFAULT_MAX_ITER) -> RunRecord:
    started = time.perf_counter()
    search = _AStar(problem, rng, max_iter)
    while True:
        search.step()
        if search.ready():
            lt, _, x = heapq.heappop(search.upper)
            if lt > search.min_lower():
                raise AssertionError("returned candidate is not dominated by the frontier")
            return _record(Arrival(lt, x, 1), search.k, search.k_bounds, rng, started)


def astar_stream(problem: TargetProblem, rng: Rng, max_iter: int = DEFAULT_MAX_ITER) -> Iterator[Arrival]:
    """Arrivals of the perturbed race in order; candidates wait until dominated."""
    search = _AStar(problem, rng, max_iter)
    emitted = 0
    while True:
        search.step()
        while search.ready():
            lt, _, x = heapq.heappop(search.upper)
            emitted += 1
            yield Arrival(lt, x, emitted)


SAMPLERS = {
    "rej": rej_first,
    "per": per_first,
    "osstar": osstar_first,
    "astar": astar_first,
}
