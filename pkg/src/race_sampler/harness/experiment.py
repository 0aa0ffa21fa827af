"""Experiment runner: independent seeded runs, CSV persistence, Table-1 bench."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..distributions import Rng
from ..problems import build_problem
from ..samplers import SAMPLERS

PROBLEMS = ("discrete", "clutter", "regression", "ising")


class UsageError(ValueError):
    """Bad experiment configuration (unknown id, nonsensical count)."""


@dataclass
class ExperimentConfig:
    problem: str = "discrete"
    sampler: str = "astar"
    runs: int = 1000
    seed: int = 0
    dim: int = 1
    n_data: int = 6
    n_spins: int = 5
    draws: int = 1
    jobs: int = 1
    out: str | None = None
    masses: list | None = None
    timing: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.problem not in PROBLEMS:
            raise UsageError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.sampler not in SAMPLERS:
            raise UsageError(f"unknown sampler {self.sampler!r}; choose from {', '.join(SAMPLERS)}")
        if self.runs < 1 or self.draws < 1 or self.jobs < 1:
            raise UsageError("runs, draws and jobs must be >= 1")
        if self.seed < 0:
            raise UsageError("seed must be nonnegative")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def draw_seeds(seed: int, draw: int, runs: int) -> tuple:
    """(dataset seed, per-run seeds) for one dataset draw; fixed by (seed, draw)."""
    data_seed = int(np.random.SeedSequence(seed, spawn_key=(draw, 0)).generate_state(1, np.uint64)[0])
    run_seeds = np.random.SeedSequence(seed, spawn_key=(draw, 1)).generate_state(runs, np.uint64)
    return data_seed, [int(s) for s in run_seeds]


def problem_for(config: ExperimentConfig, data_seed: int):
    return build_problem(config.problem, dim=config.dim, n_data=config.n_data,
                         n_spins=config.n_spins, masses=config.masses, data_seed=data_seed)


def _run_chunk(args):
    problem, sampler, seeds = args
    fn = SAMPLERS[sampler]
    out = []
    for s in seeds:
        rec = fn(problem, Rng(s))
        rec.seed = s
        out.append(rec)
    return out


def run_records(problem, sampler: str, seeds: list, jobs: int = 1) -> list:
    """Run ``sampler`` once per seed; results come back in seed order."""
    if jobs <= 1 or len(seeds) < 2:
        return _run_chunk((problem, sampler, seeds))
    size = max(1, math.ceil(len(seeds) / (4 * jobs)))
    chunks = [(problem, sampler, seeds[i:i + size]) for i in range(0, len(seeds), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    return [r for part in parts for r in part]


def mean_se(values) -> tuple:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_experiment(config: ExperimentConfig) -> str:
    """Execute the configured runs and return the CSV text (also written to ``out``)."""
    config.validate()
    rows = []
    ks = []
    width = 0
    for d in range(config.draws):
        data_seed, seeds = draw_seeds(config.seed, d, config.runs)
        problem = problem_for(config, data_seed)
        for r, rec in enumerate(run_records(problem, config.sampler, seeds, config.jobs)):
            coords = problem.coords(rec.location)
            width = max(width, len(coords))
            ks.append(rec.k_proposals)
            rows.append((d, r, rec, coords))

    header = ["problem", "sampler", "draw", "run", "seed", "k_proposals", "k_bounds", "log_time"]
    header += [f"x{i}" for i in range(width)]
    if config.timing:
        header.append("wallclock")
    header += ["mean_k", "se_k"]
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for d, r, rec, coords in rows:
        line = [config.problem, config.sampler, d, r, rec.seed, rec.k_proposals, rec.k_bounds,
                rec.log_time] + coords + [""] * (width - len(coords))
        if config.timing:
            line.append(rec.wallclock)
        out.writerow([_fmt(v) for v in line + ["", ""]])
    mean, se = mean_se(ks)
    tail = [config.problem, config.sampler, "", "summary", "", "", "", ""] + [""] * width
    if config.timing:
        tail.append("")
    out.writerow(tail + [_fmt(mean), _fmt(se)])
    text = buf.getvalue()
    if config.out:
        with open(config.out, "w", newline="") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Table 1


@dataclass(frozen=True)
class TableRow:
    label: str
    problem: str
    params: dict = field(hash=False)
    published_osstar: float = 0.0
    published_astar: float = 0.0


TABLE1 = (
    TableRow("clutter R^1 N=6", "clutter", {"dim": 1}, 9.34, 7.56),
    TableRow("clutter R^2 N=6", "clutter", {"dim": 2}, 38.3, 33.0),
    TableRow("clutter R^3 N=6", "clutter", {"dim": 3}, 130.0, 115.0),
    TableRow("regression N=10", "regression", {"n_data": 10}, 9.36, 6.77),
    TableRow("regression N=100", "regression", {"n_data": 100}, 40.6, 32.2),
    TableRow("regression N=1000", "regression", {"n_data": 1000}, 180.0, 152.0),
    TableRow("ising {-1,1}^5", "ising", {"n_spins": 5}, 4.37, 3.50),
    TableRow("ising {-1,1}^10", "ising", {"n_spins": 10}, 19.8, 15.8),
)


def table1(runs: int = 1000, draws: int = 10, seed: int = 0, jobs: int = 1,
           rows=TABLE1, progress=None) -> list:
    """Mean proposal counts of OS* and A* per Table-1 row.

    Both samplers see the same datasets. Returns one dict per (row, sampler).
    """
    results = []
    for row in rows:
        for sampler, published in (("osstar", row.published_osstar), ("astar", row.published_astar)):
            config = ExperimentConfig(problem=row.problem, sampler=sampler, runs=runs,
                                      seed=seed, draws=draws, jobs=jobs, **row.params).validate()
            ks = []
            for d in range(draws):
                data_seed, seeds = draw_seeds(seed, d, runs)
                problem = problem_for(config, data_seed)
                ks.extend(r.k_proposals for r in run_records(problem, sampler, seeds, jobs))
            mean, se = mean_se(ks)
            rec = {"row": row.label, "sampler": sampler, "mean_k": mean, "se_k": se,
                   "published_k": published, "rel_err": mean / published - 1.0,
                   "runs": runs, "draws": draws}
            results.append(rec)
            if progress:
                progress(rec)
    return results


def table1_csv(results: list) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    cols = ["row", "sampler", "mean_k", "se_k", "published_k", "rel_err", "runs", "draws"]
    out.writerow(cols)
    for r in results:
        out.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def config_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
