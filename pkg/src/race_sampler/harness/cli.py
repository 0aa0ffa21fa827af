"""Command line entry point: ``race-sampler {sample,bench,verify,race-dump}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from ..distributions import Rng
from ..measures import ContractViolation
from ..processes import RaceStream, race_next
from ..samplers import SAMPLERS, ProgressError
from .experiment import (
    PROBLEMS,
    TABLE1,
    ExperimentConfig,
    UsageError,
    draw_seeds,
    problem_for,
    run_experiment,
    table1,
    table1_csv,
)
from .verify import suite_groups, verify_suite

EXIT_OK, EXIT_USAGE, EXIT_CONTRACT, EXIT_VERIFY = 0, 2, 3, 4
SEED_ENV = "RACE_SAMPLER_SEED"

# flags shared by every subcommand that builds a problem; dest -> ExperimentConfig field
_CONFIG_FLAGS = ("problem", "sampler", "runs", "seed", "dim", "n_data", "n_spins", "out", "jobs")


def _add_config_flags(p: argparse.ArgumentParser, runs: bool = True) -> None:
    # defaults stay None so that only explicitly given flags override --config
    p.add_argument("--config", help="JSON file with experiment settings; flags override it")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--sampler", choices=sorted(SAMPLERS))
    if runs:
        p.add_argument("--runs", type=int)
        p.add_argument("--jobs", type=int)
    p.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--dim", type=int)
    p.add_argument("--n-data", dest="n_data", type=int)
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="race-sampler", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="one sampler run; prints the returned arrival")
    _add_config_flags(p, runs=False)

    p = sub.add_parser("bench", help="seeded runs to CSV, or the Table 1 reproduction")
    _add_config_flags(p)
    p.add_argument("--draws", type=int, help="dataset / parameter draws")
    p.add_argument("--timing", action="store_true", help="add a wallclock column (not reproducible)")
    p.add_argument("--table1", action="store_true", help="mean K of OS* and A* on every Table 1 row")

    p = sub.add_parser("verify", help="run the statistical property suites")
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", type=float, default=1.0, help="sample-size multiplier (default 1)")
    p.add_argument("--corrupt-bound", action="store_true", help="halve the fixture bound (fault injection)")
    p.add_argument("--only", action="append", metavar="GROUP",
                   help="run only this group (repeatable): " + ", ".join(t for t, _ in suite_groups()))

    p = sub.add_parser("race-dump", help="first k arrivals of the proposal race to CSV")
    _add_config_flags(p, runs=False)
    p.add_argument("-k", "--count", type=int, default=10)
    p.add_argument("--mode", choices=("flat", "tree"), default="flat")
    return parser


def _env_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults < JSON config file < explicit flags."""
    data: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
    for key in _CONFIG_FLAGS + ("draws", "timing"):
        value = getattr(args, key, None)
        if value is not None and value is not False:
            data[key] = value
    if "seed" not in data:
        data["seed"] = _env_seed()
    return ExperimentConfig.from_dict(data).validate()


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sample(args) -> int:
    config = resolve_config(args)
    data_seed, seeds = draw_seeds(config.seed, 0, 1)
    problem = problem_for(config, data_seed)
    rec = SAMPLERS[config.sampler](problem, Rng(seeds[0]))
    x = problem.coords(rec.location)
    print(f"problem={config.problem} sampler={config.sampler} seed={config.seed}")
    print(f"log_time={rec.log_time!r} gumbel={-rec.log_time!r}")
    print("x=" + ",".join(repr(v) for v in x))
    print(f"k_proposals={rec.k_proposals} k_bounds={rec.k_bounds}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.table1:
        config = resolve_config(args)
        runs = args.runs or 1000
        draws = args.draws or 10

        def progress(r):
            print(f"{r['row']:<20s} {r['sampler']:<7s} mean K={r['mean_k']:8.3f} (se {r['se_k']:.3f})"
                  f"  published {r['published_k']:g}  rel err {100 * r['rel_err']:+.1f}%", file=sys.stderr)

        results = table1(runs=runs, draws=draws, seed=config.seed, jobs=config.jobs, rows=TABLE1,
                         progress=progress)
        _emit(table1_csv(results), args.out)
        return EXIT_OK
    config = resolve_config(args)
    out, config.out = config.out, None
    _emit(run_experiment(config), out)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _env_seed()
    if args.scale <= 0:
        raise UsageError("--scale must be positive")
    try:
        _, ok = verify_suite(seed, corrupt_bound=args.corrupt_bound, scale=args.scale, only=args.only)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_race_dump(args) -> int:
    config = resolve_config(args)
    if args.count < 1:
        raise UsageError("-k must be >= 1")
    data_seed, seeds = draw_seeds(config.seed, 0, 1)
    problem = problem_for(config, data_seed)
    split = problem.split if args.mode == "tree" else None
    stream = RaceStream(problem.proposal, Rng(seeds[0]), mode=args.mode, split=split)
    arrivals = [race_next(stream) for _ in range(args.count)]
    coords = [problem.coords(a.location) for a in arrivals]
    width = max(len(c) for c in coords)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "log_time", "time"] + [f"x{i}" for i in range(width)])
    for a, c in zip(arrivals, coords):
        w.writerow([a.index, repr(a.log_time), repr(a.time)] + [repr(v) if isinstance(v, float) else v for v in c])
    _emit(buf.getvalue(), config.out)
    return EXIT_OK


COMMANDS = {"sample": cmd_sample, "bench": cmd_bench, "verify": cmd_verify, "race-dump": cmd_race_dump}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"race-sampler: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContractViolation, ProgressError) as exc:
        print(f"race-sampler: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
