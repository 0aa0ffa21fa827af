"""Exact sampling from unnormalised densities through exponential races.

The first arrival of an exponential race with measure P is an exact sample
from P / P(R^n). The samplers here (REJ, PER, OS*, A*) simulate races with a
tractable proposal measure and transform them into the target race.
"""

from .distributions import Rng
from .measures import ContractViolation, TargetProblem
from .processes import Arrival, GumbelStream, RaceStream, race_next
from .samplers import (
    SAMPLERS,
    ProgressError,
    RunRecord,
    astar_first,
    astar_stream,
    oracle_per,
    oracle_rej,
    osstar_first,
    per_first,
    per_stream,
    rej_first,
    rej_stream,
)

__all__ = [
    "Arrival", "ContractViolation", "GumbelStream", "ProgressError", "RaceStream", "Rng", "RunRecord",
    "SAMPLERS", "TargetProblem", "astar_first", "astar_stream", "oracle_per", "oracle_rej", "osstar_first",
    "per_first", "per_stream", "race_next", "rej_first", "rej_stream",
]

__version__ = "0.1.0"
