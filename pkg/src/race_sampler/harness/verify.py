"""The verification suite: every property check at fixed sizes, one table."""

from __future__ import annotations

import sys
import time

from ..problems import make_discrete
from . import checks as C
from .stats import StatReport


def suite_groups(scale: float = 1.0, corrupt_bound: bool = False) -> list:
    """(title, group(seed)) pairs; each group returns reports with a fixed layout."""
    fixture = make_discrete(C.DISCRETE_FIXTURE, bound_scale=0.5 if corrupt_bound else 1.0)
    n = lambda base: max(500, int(base * scale))
    return [
        ("fixture", lambda s: [C.check_bound_soundness(fixture, s, n(10_000),
                                                             name="discrete fixture bound soundness")]),
        ("distributions", lambda s: C.check_distributions(s, n(100_000))),
        ("processes", lambda s: C.check_processes(s, scale)),
        ("samplers", lambda s: C.check_samplers(s, scale)),
        ("problems", lambda s: C.check_problems(s, scale)),
        ("lp", lambda s: C.check_lp_bound(s, max(20, int(100 * scale)))),
        ("entropy", lambda s: C.check_entropy_identities(s, n(100_000))),
    ]


def verify_suite(master_seed: int = 0, corrupt_bound: bool = False, scale: float = 1.0,
                 out=sys.stdout, only=None) -> tuple:
    """Run the property groups (all, or those named in ``only``).

    Returns (reports, all_passed) and prints a table to ``out``.
    """
    groups = suite_groups(scale, corrupt_bound)
    if only:
        unknown = set(only) - {t for t, _ in groups}
        if unknown:
            raise ValueError(f"unknown verify groups: {sorted(unknown)}")
    reports: list[StatReport] = []
    for k, (title, group) in enumerate(groups):
        if only and title not in only:
            continue
        started = time.perf_counter()
        got = C.retrying(group, master_seed + 1000 * k)
        reports.extend(got)
        if out is not None:
            print(f"== {title} ({time.perf_counter() - started:.1f}s)", file=out)
            for r in got:
                print("  " + r.line(), file=out)
            out.flush()
    failed = sum(not r.passed for r in reports)
    if out is not None:
        print(f"{len(reports) - failed}/{len(reports)} checks passed", file=out)
    return reports, failed == 0
