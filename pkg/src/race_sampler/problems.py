"""Concrete target problems: a discrete table, the clutter posterior, robust
Bayesian regression and an attractive fully connected Ising model, plus
their dataset generators.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np
from scipy.special import ndtri

from .distributions import Rng, as_rng
from .lp import ising_relaxation
from .measures import (
    NEG_INF,
    AtomSet,
    CountingMeasure,
    ContractViolation,
    GaussianMeasure,
    HalfOpenBox,
    Interval,
    SpinCountingMeasure,
    SpinSubcube,
    TargetProblem,
    split_box_widest,
)

_LOG_HALF = math.log(0.5)
_LOG_2PI = math.log(2 * math.pi)


class DiscreteProblem(TargetProblem):
    """Unnormalised masses f(0..m-1) under the counting measure."""

    name = "discrete"

    def __init__(self, masses, bound_scale: float = 1.0):
        masses = [float(v) for v in masses]
        if not masses:
            raise ValueError("need at least one mass")
        if any(not (v > 0) or math.isinf(v) for v in masses):
            raise ValueError(f"masses must be positive and finite: {masses}")
        self.masses = masses
        self.log_masses = [math.log(v) for v in masses]
        # bound_scale < 1 deliberately corrupts the bound (fault injection)
        self.log_scale = math.log(bound_scale)
        self.proposal = CountingMeasure(len(masses))

    @property
    def log_total(self) -> float:
        return math.log(math.fsum(self.masses))

    def probabilities(self) -> np.ndarray:
        p = np.array(self.masses)
        return p / p.sum()

    def log_f(self, x):
        x = int(x)
        return self.log_masses[x] if 0 <= x < len(self.masses) else NEG_INF

    def log_bound(self, region):
        region = self.proposal.resolve(region)
        return max(self.log_masses[a] for a in region.atoms) + self.log_scale

    def split(self, region, x):
        # pull the proposed atom out into its own cell
        region = self.proposal.resolve(region)
        x = int(x)
        rest = region.atoms - {x}
        if not rest or x not in region.atoms:
            return [region]
        return [AtomSet(frozenset({x})), AtomSet(rest)]


def make_discrete(masses, bound_scale: float = 1.0) -> DiscreteProblem:
    return DiscreteProblem(masses, bound_scale)


# ---------------------------------------------------------------------------
# clutter posterior


CLUTTER_LEVELS = (-5.0, -4.0, -3.0, 3.0, 4.0, 5.0)


def clutter_dataset(dim: int, levels=CLUTTER_LEVELS) -> np.ndarray:
    return np.array([[a] * dim for a in levels], dtype=float)


class ClutterProblem(TargetProblem):
    """Posterior over a Normal mean with a broad outlier component.

    The prior kernel is exp(-|theta|^2 / 8), i.e. variance 4 per coordinate.
    """

    name = "clutter"

    def __init__(self, data, dim: int | None = None):
        data = np.atleast_2d(np.asarray(data, dtype=float))
        if data.size == 0:
            raise ValueError("clutter needs at least one data point")
        if dim is not None and data.shape[1] != dim:
            raise ValueError(f"data points have dimension {data.shape[1]}, expected {dim}")
        self.data = data
        self.dim = data.shape[1]
        n = self.dim
        self.proposal = GaussianMeasure(n, variance=4.0)
        self._log_inlier = _LOG_HALF - 0.5 * n * _LOG_2PI
        # the outlier term does not depend on theta
        self._log_outlier = (_LOG_HALF - 0.5 * np.sum(data ** 2, axis=1) / 100.0 ** 2
                             - n * math.log(100.0) - 0.5 * n * _LOG_2PI)

    def _log_terms(self, sq_dist: np.ndarray) -> float:
        inlier = self._log_inlier - 0.5 * sq_dist
        return float(np.sum(np.logaddexp(inlier, self._log_outlier)))

    def log_f(self, theta):
        theta = np.asarray(theta, dtype=float)
        d = self.data - theta
        return self.proposal.log_density(theta) + self._log_terms(np.sum(d * d, axis=1))

    def _box(self, region):
        region = self.proposal.resolve(region)
        if isinstance(region, Interval):
            return np.array([region.a]), np.array([region.b])
        return np.array(region.lo, dtype=float), np.array(region.hi, dtype=float)

    def log_bound(self, region):
        lo, hi = self._box(region)
        nearest = np.clip(self.data, lo, hi)
        d = self.data - nearest
        return self._log_terms(np.sum(d * d, axis=1))

    def split(self, region, x):
        return split_box_widest(self.proposal.resolve(region), x)


def make_clutter(data=None, dim: int = 1) -> ClutterProblem:
    if data is None:
        data = clutter_dataset(dim)
    return ClutterProblem(data, dim)


# ---------------------------------------------------------------------------
# robust regression


def regression_dataset(n_data: int, rng, w_true: float = 2.0, noise_sd: float = 0.1) -> np.ndarray:
    """(x, y) pairs: first half y = w x + noise, second half mirrored to -y."""
    if n_data < 2 or n_data % 2:
        raise ValueError("n_data must be an even number >= 2")
    rng = as_rng(rng)
    half = n_data // 2
    xs = np.array([float(ndtri(rng.uniform01())) for _ in range(half)])
    eps = np.array([noise_sd * float(ndtri(rng.uniform01())) for _ in range(half)])
    ys = w_true * xs + eps
    return np.column_stack([np.concatenate([xs, xs]), np.concatenate([ys, -ys])])


class RegressionProblem(TargetProblem):
    """Posterior over a slope with Cauchy noise and prior kernel exp(-w^2 / 8)."""

    name = "regression"

    def __init__(self, data):
        data = np.asarray(data, dtype=float).reshape(-1, 2)
        if data.shape[0] == 0:
            raise ValueError("regression needs data")
        if np.any(data[:, 0] == 0):
            raise ValueError("regression inputs x_i must be nonzero")
        self.data = data
        self.x = data[:, 0].copy()
        self.y = data[:, 1].copy()
        self.ratio = self.y / self.x
        self.proposal = GaussianMeasure(1, variance=4.0)

    def _log_lik(self, w) -> float:
        r = w * self.x - self.y
        return -float(np.sum(np.log1p(r * r)))

    def log_f(self, w):
        w = float(np.asarray(w).reshape(-1)[0])
        return -w * w / 8.0 + self._log_lik(w)

    def log_bound(self, region):
        region = self.proposal.resolve(region)
        # each Cauchy term peaks at y_i / x_i; clamp that peak into the interval
        w = np.clip(self.ratio, region.a, region.b)
        r = w * self.x - self.y
        return -float(np.sum(np.log1p(r * r)))

    def split(self, region, x):
        return split_box_widest(self.proposal.resolve(region), x)


def make_regression(data) -> RegressionProblem:
    return RegressionProblem(data)


# ---------------------------------------------------------------------------
# Ising


def ising_parameters(n: int, rng) -> tuple:
    """Fields ~ U[-1, 1], couplings w_ij ~ U[0, 0.2] for i < j."""
    rng = as_rng(rng)
    fields = np.array([2.0 * rng.uniform01() - 1.0 for _ in range(n)])
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = 0.2 * rng.uniform01()
    return fields, w


class IsingProblem(TargetProblem):
    """Attractive fully connected Ising model on {-1, +1}^n, uniform proposal."""

    name = "ising"

    def __init__(self, n: int, fields, weights):
        if n < 2:
            raise ValueError("Ising model needs n >= 2")
        self.n = n
        self.fields = np.asarray(fields, dtype=float).reshape(n)
        w = np.triu(np.asarray(weights, dtype=float).reshape(n, n), 1)
        if np.any(w < 0):
            raise ValueError("couplings must be nonnegative (attractive)")
        self.weights = w
        self.proposal = SpinCountingMeasure(n)
        self._relax: dict = {}

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_relax"] = {}
        return state

    def log_f(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.fields @ x + x @ self.weights @ x)

    def relaxation(self, region: SpinSubcube) -> tuple:
        key = region.fixed
        hit = self._relax.get(key)
        if hit is None:
            hit = ising_relaxation(self, region)
            self._relax[key] = hit
        return hit

    def log_bound(self, region):
        region = self.proposal.resolve(region)
        if region.is_point:
            x = np.zeros(self.n)
            for i, s in region.fixed:
                x[i] = s
            return self.log_f(x)
        return self.relaxation(region)[0]

    def split_variable(self, region: SpinSubcube) -> int:
        _, frac = self.relaxation(region)
        best, arg = math.inf, -1
        for i in region.free:
            v = frac[i]
            if abs(v - round(v)) < 1e-9:
                v = round(v)
            d = abs(v - 0.5)
            if d < best - 1e-12:
                best, arg = d, i
        return arg

    def split(self, region, x):
        region = self.proposal.resolve(region)
        if region.is_point:
            return [region]
        i = self.split_variable(region)
        return [region.with_fixed(i, -1), region.with_fixed(i, 1)]


def make_ising(n: int, rng_or_params=0) -> IsingProblem:
    """Draw parameters from a seed/Rng, or pass ``(fields, weights)`` explicitly."""
    if n < 2:
        raise ValueError("Ising model needs n >= 2")
    if isinstance(rng_or_params, tuple):
        fields, weights = rng_or_params
    else:
        fields, weights = ising_parameters(n, rng_or_params)
    return IsingProblem(n, fields, weights)


def dataset_csv(problem: TargetProblem) -> str:
    """The problem's data as CSV text, for auditing generated datasets."""
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    if isinstance(problem, ClutterProblem):
        out.writerow([f"x{d}" for d in range(problem.dim)])
        out.writerows([repr(float(v)) for v in row] for row in problem.data)
    elif isinstance(problem, RegressionProblem):
        out.writerow(["x", "y"])
        out.writerows([repr(float(a)), repr(float(b))] for a, b in problem.data)
    elif isinstance(problem, IsingProblem):
        out.writerow(["i", "j", "value"])
        for i in range(problem.n):
            out.writerow([i, "", repr(float(problem.fields[i]))])
        for i in range(problem.n):
            for j in range(i + 1, problem.n):
                out.writerow([i, j, repr(float(problem.weights[i, j]))])
    elif isinstance(problem, DiscreteProblem):
        out.writerow(["atom", "mass"])
        out.writerows([k, repr(v)] for k, v in enumerate(problem.masses))
    else:
        raise ContractViolation(f"no dataset serialisation for {type(problem).__name__}")
    return buf.getvalue()


def build_problem(problem_id: str, *, dim: int = 1, n_data: int = 6, n_spins: int = 5,
                  masses=None, data_seed: int = 0) -> TargetProblem:
    """Instantiate a problem by id; ``data_seed`` drives generated datasets."""
    if problem_id == "discrete":
        return make_discrete(masses if masses is not None else [1, 2, 3, 4])
    if problem_id == "clutter":
        return make_clutter(dim=dim)
    if problem_id == "regression":
        return make_regression(regression_dataset(n_data, Rng(data_seed)))
    if problem_id == "ising":
        return make_ising(n_spins, Rng(data_seed))
    raise KeyError(problem_id)
