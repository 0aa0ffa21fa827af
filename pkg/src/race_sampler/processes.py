"""Point processes: Poisson realisation on a window, exponential races (flat
and over a space-partitioning tree), Gumbel processes by truncated-Gumbel
chains, and the thinning / mapping transforms.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .distributions import Rng, log_exp_time, sample_categorical_log, sample_poisson, sample_trunc_gumbel
from .measures import (
    NEG_INF,
    ContractViolation,
    Point,
    ProposalMeasure,
    Region,
    log_add,
    log_sum,
    region_contains,
)


@dataclass(frozen=True)
class Arrival:
    """One point of a race. ``log_time`` is log T; the Gumbel value is -log T."""

    log_time: float
    location: Point
    index: int = 0

    @property
    def time(self) -> float:
        return math.exp(self.log_time)

    @property
    def gumbel(self) -> float:
        return -self.log_time


@dataclass
class PointPattern:
    points: list
    window: Region

    def __len__(self):
        return len(self.points)

    def count_in(self, region: Region) -> int:
        return sum(1 for x in self.points if region_contains(region, x))


def poisson_realize(mean_measure: ProposalMeasure, window: Region, rng: Rng) -> PointPattern:
    """A Poisson process with the given mean measure, observed on ``window``."""
    window = mean_measure.resolve(window)
    lm = mean_measure.log_mass(window)
    if lm == math.inf or math.isnan(lm):
        raise ValueError("window has infinite mass")
    n = sample_poisson(math.exp(lm), rng) if lm > NEG_INF else 0
    return PointPattern([mean_measure.sample_in(window, rng) for _ in range(n)], window)


def thin(pattern: PointPattern, keep_log_prob: Callable, rng: Rng) -> PointPattern:
    kept = []
    for x in pattern.points:
        lp = keep_log_prob(x)
        if lp > 1e-12:
            raise ContractViolation(f"keep probability exp({lp}) exceeds 1")
        if lp == NEG_INF:
            continue
        if math.log(rng.uniform01()) < lp:
            kept.append(x)
    return PointPattern(kept, pattern.window)


def map_points(pattern: PointPattern, h: Callable, window: Region | None = None) -> PointPattern:
    """Pointwise image under an injective ``h``."""
    return PointPattern([h(x) for x in pattern.points], window if window is not None else pattern.window)


# ---------------------------------------------------------------------------
# exponential races


class RaceStream:
    """Arrivals of an exponential race with measure Q, in time order.

    ``mode="flat"`` adds Exp(Q(region)) gaps and draws locations from the
    whole region. ``mode="tree"`` lazily grows a space-partitioning tree:
    each node's next arrival is assigned to one child in proportion to mass
    and the remaining children receive sequentially later times.
    """

    def __init__(self, measure: ProposalMeasure, rng: Rng, mode: str = "flat",
                 region: Region | None = None, split: Callable | None = None):
        if mode not in ("flat", "tree"):
            raise ValueError(f"unknown race mode {mode!r}")
        if mode == "tree" and split is None:
            raise ValueError("tree mode needs a split function")
        self.measure = measure
        self.rng = rng
        self.mode = mode
        self.region = measure.resolve(region if region is not None else measure.root())
        self.split = split
        self.log_mass = measure.log_mass(self.region)
        if not (NEG_INF < self.log_mass < math.inf):
            raise ValueError("race measure must have positive finite mass")
        self.log_time = NEG_INF
        self.count = 0
        self._tie = itertools.count()
        self._nodes: list = []
        if mode == "tree":
            t = log_exp_time(self.log_mass, rng)
            self._nodes.append((t, next(self._tie), self.region, self.log_mass))

    def __iter__(self) -> Iterator[Arrival]:
        return self

    def __next__(self) -> Arrival:
        return race_next(self)


def race_next(stream: RaceStream) -> Arrival:
    rng = stream.rng
    if stream.mode == "flat":
        stream.log_time = log_add(stream.log_time, log_exp_time(stream.log_mass, rng))
        x = stream.measure.sample_in(stream.region, rng)
    else:
        t, _, region, lm = heapq.heappop(stream._nodes)
        if t <= stream.log_time:
            raise AssertionError("tree race emitted out of order")
        stream.log_time = t
        x = stream.measure.sample_in(region, rng)
        t_next = log_add(t, log_exp_time(lm, rng))
        push_children(stream._nodes, stream._tie, stream.measure, region, lm, x, t_next,
                      stream.split, rng)
    stream.count += 1
    return Arrival(stream.log_time, x, stream.count)


def push_children(heap, tie, measure, region, log_mass, x, log_time, split, rng, key=None):
    """Hand the node's next arrival to its children, or re-queue the node.

    ``key(log_time, child_region)`` gives the heap priority; by default the
    log-time itself.
    """
    key = key or (lambda t, c: t)
    children = split(region, x) if split is not None else [region]
    parts = []
    for c in children:
        lm = measure.log_mass(c)
        if lm > NEG_INF:
            parts.append((c, lm))
    if len(parts) < 2:
        heapq.heappush(heap, (key(log_time, region), next(tie), region, log_mass))
        return
    t = log_time
    while parts:
        k = sample_categorical_log([lm for _, lm in parts], rng)
        c, lm = parts.pop(k)
        heapq.heappush(heap, (key(t, c), next(tie), c, lm))
        if parts:
            t = log_add(t, log_exp_time(log_sum([m for _, m in parts]), rng))


# ---------------------------------------------------------------------------
# Gumbel processes


class GumbelStream:
    """Values of a Gumbel process with measure Q in decreasing order.

    Each value is a truncated Gumbel whose location is the log-mass of the
    space not yet visited. For discrete measures visited atoms are removed,
    so the stream ends after every atom has been emitted.
    """

    def __init__(self, measure: ProposalMeasure, rng: Rng, region: Region | None = None):
        self.measure = measure
        self.rng = rng
        self.region = measure.resolve(region if region is not None else measure.root())
        self.last = math.inf
        self.count = 0
        if measure.discrete:
            self._atoms = list(measure.atoms(self.region))
            self._log_w = [measure.log_density(a) for a in self._atoms]
        else:
            self._atoms = None
            self._lm = measure.log_mass(self.region)

    def remaining_log_mass(self) -> float:
        if self._atoms is None:
            return self._lm
        return log_sum(self._log_w)

    def __iter__(self):
        return self

    def __next__(self):
        out = gumbel_process_next(self)
        if out is None:
            raise StopIteration
        return out


def gumbel_process_next(stream: GumbelStream):
    """Next (G, X), or None once a finite discrete support is exhausted."""
    lm = stream.remaining_log_mass()
    if lm == NEG_INF:
        return None
    g = sample_trunc_gumbel(lm, stream.last, stream.rng)
    if stream._atoms is None:
        x = stream.measure.sample_in(stream.region, stream.rng)
    else:
        k = sample_categorical_log(stream._log_w, stream.rng)
        x = stream._atoms.pop(k)
        stream._log_w.pop(k)
    stream.last = g
    stream.count += 1
    return g, x
