"""Sample spaces, regions, proposal measures and the target-problem contract.

Everything that has a magnitude (masses, densities, bounds) is carried as a
natural log. ``NEG_INF`` stands for log(0).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri_exp

NEG_INF = -math.inf
LOG_TOL = 1e-9


class ContractViolation(Exception):
    """A user-supplied problem broke the bound, split or support contract."""


# ---------------------------------------------------------------------------
# log-domain arithmetic


def log_add(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


def log_sub(a: float, b: float) -> float:
    """log(exp(a) - exp(b)) for a >= b."""
    if b > a:
        raise ValueError(f"log_sub of a larger value: {a} < {b}")
    if b == NEG_INF:
        return a
    if a == b:
        return NEG_INF
    d = b - a
    # log1mexp split point keeps both branches accurate
    if d > -0.6931471805599453:
        return a + math.log(-math.expm1(d))
    return a + math.log1p(-math.exp(d))


def log_sum(values: Sequence[float]) -> float:
    """log(sum(exp(v))) with a max shift; the empty sum is log(0)."""
    if len(values) == 0:
        return NEG_INF
    m = max(values)
    if m == NEG_INF:
        return NEG_INF
    if m == math.inf:
        return math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


# ---------------------------------------------------------------------------
# points and regions
#
# A point is an ``int`` atom for finite discrete spaces, or a 1-d float array
# (continuous coordinates, or spins in {-1, +1}).

Point = Union[int, np.ndarray]


def spin_point(spins) -> np.ndarray:
    x = np.asarray(spins, dtype=float)
    if x.ndim != 1 or not np.all(np.abs(x) == 1.0):
        raise ContractViolation(f"spins must be a vector over {{-1, +1}}: {spins!r}")
    return x


@dataclass(frozen=True)
class FullSpace:
    """The whole sample space of dimension ``n``; problems resolve it to their root."""

    n: int


@dataclass(frozen=True)
class HalfOpenBox:
    """The set {y : lo_d < y_d <= hi_d}. Endpoints may be infinite."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ContractViolation("box endpoints differ in length")
        for a, b in zip(self.lo, self.hi):
            if not a < b:
                raise ContractViolation(f"empty box side ({a}, {b}]")

    @classmethod
    def full(cls, n: int) -> "HalfOpenBox":
        return cls((-math.inf,) * n, (math.inf,) * n)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x) -> bool:
        return all(a < v <= b for a, v, b in zip(self.lo, x, self.hi))


@dataclass(frozen=True)
class Interval:
    """The half-open interval (a, b] of the real line."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ContractViolation(f"empty interval ({self.a}, {self.b}]")

    def contains(self, x) -> bool:
        v = float(np.asarray(x).reshape(-1)[0])
        return self.a < v <= self.b


@dataclass(frozen=True)
class SpinSubcube:
    """Points of {-1, +1}^n agreeing with ``fixed``, a sorted tuple of (index, spin)."""

    n: int
    fixed: tuple = ()

    def __post_init__(self):
        seen = set()
        for i, s in self.fixed:
            if not 0 <= i < self.n:
                raise ContractViolation(f"spin index {i} out of range for n={self.n}")
            if i in seen:
                raise ContractViolation(f"spin index {i} fixed twice")
            if s not in (-1, 1):
                raise ContractViolation(f"spin value {s} not in {{-1, +1}}")
            seen.add(i)
        object.__setattr__(self, "fixed", tuple(sorted((int(i), int(s)) for i, s in self.fixed)))

    @property
    def free(self) -> list:
        taken = {i for i, _ in self.fixed}
        return [i for i in range(self.n) if i not in taken]

    @property
    def is_point(self) -> bool:
        return len(self.fixed) == self.n

    def with_fixed(self, i: int, s: int) -> "SpinSubcube":
        return SpinSubcube(self.n, self.fixed + ((i, s),))

    def contains(self, x) -> bool:
        return len(x) == self.n and all(x[i] == s for i, s in self.fixed)


@dataclass(frozen=True)
class AtomSet:
    """A finite set of integer atoms (used for discrete tables)."""

    atoms: frozenset

    def __post_init__(self):
        object.__setattr__(self, "atoms", frozenset(int(a) for a in self.atoms))

    def contains(self, x) -> bool:
        return int(x) in self.atoms

    def __len__(self):
        return len(self.atoms)


Region = Union[FullSpace, HalfOpenBox, Interval, SpinSubcube, AtomSet]


def region_contains(region: Region, x) -> bool:
    if isinstance(region, FullSpace):
        return True
    return region.contains(x)


# ---------------------------------------------------------------------------
# proposal measures


class ProposalMeasure(ABC):
    """A tractable finite measure Q with density g w.r.t. a base measure."""

    discrete = False

    @abstractmethod
    def log_mass(self, region: Region) -> float: ...

    @abstractmethod
    def sample_in(self, region: Region, rng) -> Point: ...

    @abstractmethod
    def log_density(self, x: Point) -> float: ...

    def root(self) -> Region:
        raise NotImplementedError

    def resolve(self, region: Region) -> Region:
        return self.root() if isinstance(region, FullSpace) else region


class CountingMeasure(ProposalMeasure):
    """Counting measure on atoms 0..m-1 (g = 1)."""

    discrete = True

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("need at least one atom")
        self.m = m

    def root(self) -> AtomSet:
        return AtomSet(frozenset(range(self.m)))

    def log_mass(self, region):
        region = self.resolve(region)
        return math.log(len(region)) if len(region) else NEG_INF

    def sample_in(self, region, rng):
        atoms = sorted(self.resolve(region).atoms)
        return atoms[rng.randbelow(len(atoms))]

    def log_density(self, x):
        return 0.0 if 0 <= int(x) < self.m else NEG_INF

    def atoms(self, region):
        return sorted(self.resolve(region).atoms)


class SpinCountingMeasure(ProposalMeasure):
    """Counting measure on {-1, +1}^n (g = 1)."""

    discrete = True

    def __init__(self, n: int):
        self.n = n

    def root(self) -> SpinSubcube:
        return SpinSubcube(self.n)

    def log_mass(self, region):
        region = self.resolve(region)
        return (region.n - len(region.fixed)) * math.log(2.0)

    def sample_in(self, region, rng):
        region = self.resolve(region)
        x = np.empty(region.n)
        for i in range(region.n):
            x[i] = 1.0 if rng.uniform01() < 0.5 else -1.0
        for i, s in region.fixed:
            x[i] = s
        return x

    def log_density(self, x):
        return 0.0

    def atoms(self, region):
        region = self.resolve(region)
        free = region.free
        out = []
        for code in range(2 ** len(free)):
            x = np.empty(region.n)
            for i, s in region.fixed:
                x[i] = s
            for k, i in enumerate(free):
                x[i] = 1.0 if (code >> k) & 1 else -1.0
            out.append(x)
        return out


def _log_normal_interval(a: float, b: float) -> float:
    """log(Phi(b) - Phi(a)) for the standard normal, accurate in both tails."""
    if a >= 0.0:
        a, b = -b, -a
    if b <= 0.0:
        lb = float(log_ndtr(b))
        la = float(log_ndtr(a)) if a > -math.inf else NEG_INF
        return log_sub(lb, la)
    return math.log1p(-(float(ndtr(a)) + float(ndtr(-b))))


def _truncated_std_normal(a: float, b: float, rng) -> float:
    """Inverse-CDF draw from N(0,1) restricted to (a, b]."""
    flip = a >= 0.0
    if flip:
        a, b = -b, -a
    la = float(log_ndtr(a)) if a > -math.inf else NEG_INF
    lmass = _log_normal_interval(a, b)
    lu = log_add(la, math.log(rng.uniform01()) + lmass)
    z = float(ndtri_exp(min(lu, 0.0)))
    z = min(max(z, a), b)
    if flip:
        z = -z
        a, b = -b, -a
    if z <= a:
        z = math.nextafter(a, math.inf)
    return z


class GaussianMeasure(ProposalMeasure):
    """Unnormalised Gaussian kernel g(x) = exp(-|x|^2 / (2 var)) on R^n.

    Q(B) carries the full (2 pi var)^(n/2) mass so that log f - log g is the
    plain likelihood term.
    """

    def __init__(self, dim: int, variance: float = 4.0):
        self.dim = dim
        self.variance = variance
        self.sigma = math.sqrt(variance)
        self._log_norm = 0.5 * math.log(2.0 * math.pi * variance)

    def root(self):
        if self.dim == 1:
            return Interval(-math.inf, math.inf)
        return HalfOpenBox.full(self.dim)

    def _sides(self, region):
        region = self.resolve(region)
        if isinstance(region, Interval):
            return [(region.a, region.b)]
        return list(zip(region.lo, region.hi))

    def log_mass(self, region):
        s = self.sigma
        return sum(self._log_norm + _log_normal_interval(a / s, b / s) for a, b in self._sides(region))

    def sample_in(self, region, rng):
        s = self.sigma
        return np.array([s * _truncated_std_normal(a / s, b / s, rng) for a, b in self._sides(region)])

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return -float(x @ x) / (2.0 * self.variance)


class LebesgueMeasure(ProposalMeasure):
    """Lebesgue measure restricted to a bounded box ``window``."""

    def __init__(self, window: HalfOpenBox):
        if not all(math.isfinite(v) for v in window.lo + window.hi):
            raise ValueError("Lebesgue window must be bounded")
        self.window = window

    def root(self):
        return self.window

    def _sides(self, region):
        region = self.resolve(region)
        if isinstance(region, Interval):
            region = HalfOpenBox((region.a,), (region.b,))
        out = []
        for a, b, wa, wb in zip(region.lo, region.hi, self.window.lo, self.window.hi):
            out.append((max(a, wa), min(b, wb)))
        return out

    def log_mass(self, region):
        total = 0.0
        for a, b in self._sides(region):
            if b <= a:
                return NEG_INF
            total += math.log(b - a)
        return total

    def sample_in(self, region, rng):
        return np.array([b - (b - a) * rng.uniform01() for a, b in self._sides(region)])

    def log_density(self, x):
        return 0.0 if self.window.contains(x) else NEG_INF


# ---------------------------------------------------------------------------
# splits


def split_box_widest(region, x) -> list:
    """Bisect a box at ``x`` along its widest side.

    Several sides are infinitely wide until the box is bounded; such ties
    are broken by a hash of the split point so no axis is favoured.
    """
    if isinstance(region, Interval):
        v = float(np.asarray(x).reshape(-1)[0])
        if not region.a < v < region.b:
            return [region]
        return [Interval(region.a, v), Interval(v, region.b)]
    widths = [b - a for a, b in zip(region.lo, region.hi)]
    widest = max(widths)
    ties = [d for d, w in enumerate(widths) if w == widest]
    s = ties[hash(tuple(float(v) for v in x)) % len(ties)] if len(ties) > 1 else ties[0]
    v = float(x[s])
    if not region.lo[s] < v < region.hi[s]:
        return [region]
    hi = list(region.hi)
    hi[s] = v
    lo = list(region.lo)
    lo[s] = v
    return [HalfOpenBox(region.lo, tuple(hi)), HalfOpenBox(tuple(lo), region.hi)]


# ---------------------------------------------------------------------------
# the problem contract


class TargetProblem(ABC):
    """Target density f, proposal Q, regional log-bound and split.

    ``log_bound(B)`` must bound ``log_f(x) - proposal.log_density(x)`` over B.
    """

    name = "problem"
    proposal: ProposalMeasure

    @property
    def root(self) -> Region:
        return self.proposal.root()

    @abstractmethod
    def log_f(self, x: Point) -> float: ...

    @abstractmethod
    def log_bound(self, region: Region) -> float: ...

    @abstractmethod
    def split(self, region: Region, x: Point) -> list: ...

    def log_ratio(self, x: Point) -> float:
        """log f(x) - log g(x), enforcing equal supports at x."""
        lf = self.log_f(x)
        lg = self.proposal.log_density(x)
        if math.isfinite(lf) != math.isfinite(lg):
            raise ContractViolation(f"support mismatch at {x!r}: log f={lf}, log g={lg}")
        if not math.isfinite(lg):
            return NEG_INF
        return lf - lg

    def coords(self, x: Point) -> list:
        """Flat list of coordinates used when a point is written to CSV."""
        if isinstance(x, (int, np.integer)):
            return [int(x)]
        return [float(v) for v in np.asarray(x).reshape(-1)]


@dataclass
class FunctionalProblem(TargetProblem):
    """A TargetProblem assembled from plain callables."""

    proposal: ProposalMeasure
    log_f_fn: Callable
    log_bound_fn: Callable
    split_fn: Callable = field(default=lambda region, x: [region])
    name: str = "functional"

    def log_f(self, x):
        return self.log_f_fn(x)

    def log_bound(self, region):
        return self.log_bound_fn(self.proposal.resolve(region))

    def split(self, region, x):
        return self.split_fn(region, x)


def region_volume_check(problem: TargetProblem, region: Region, parts: Sequence[Region],
                        rng=None, n_probe: int = 200, rtol: float = 1e-6) -> bool:
    """True iff ``parts`` partition ``region``: masses add up and membership is exclusive.

    Disjointness is probed with ``n_probe`` proposal draws from ``region``.
    """
    q = problem.proposal
    region = q.resolve(region)
    parent = q.log_mass(region)
    masses = [q.log_mass(p) for p in parts]
    total = log_sum(masses)
    if parent == NEG_INF:
        if total != NEG_INF:
            return False
    elif abs(math.exp(total - parent) - 1.0) > rtol:
        return False
    if rng is not None:
        for _ in range(n_probe):
            x = q.sample_in(region, rng)
            hits = sum(1 for p in parts if region_contains(p, x))
            if hits != 1:
                return False
    return True
