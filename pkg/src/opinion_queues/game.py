"""Congestion-game view of queue selection, plus per-trial trace statistics.

With two identical nondecreasing-cost queues, the pure Nash profiles are
exactly the configurations with an empty waiting pool and queue counts
as balanced as parity allows. `in_nash_band` tests that characterization
directly; `is_nash_brute_force` is the independent oracle that checks
every unilateral deviation.
"""

from itertools import product
from typing import Callable, NamedTuple, Optional

import numpy as np

__all__ = [
    "QueueCounts",
    "nash_imbalance_limit",
    "in_nash_band",
    "counts_from_profile",
    "is_nash_brute_force",
    "is_nondecreasing_cost",
    "band_oracle_mismatches",
    "hitting_time",
    "PersistenceResult",
    "persistence_after_last_hit",
    "switch_count",
    "TrialStats",
    "trial_statistics",
]


class QueueCounts(NamedTuple):
    n_a: int
    n_b: int
    n_w: int


def nash_imbalance_limit(n: int) -> int:
    """Largest |n_A - n_B| compatible with Nash when the pool is empty.

    0 when n is even, 1 when n is odd (parity of n_A - n_B matches the
    parity of n once everyone is queued).
    """
    if n < 1:
        raise ValueError(f"agent count must be >= 1, got {n}")
    return n % 2


def in_nash_band(counts: QueueCounts, n: int) -> bool:
    """True iff the waiting pool is empty and the imbalance is within parity."""
    n_a, n_b, n_w = counts
    return n_w == 0 and abs(n_a - n_b) <= nash_imbalance_limit(n)


def counts_from_profile(profile) -> QueueCounts:
    """Queue counts of a +/-1 strategy profile (nobody waiting)."""
    profile = np.asarray(profile)
    n_a = int(np.count_nonzero(profile == 1))
    n_b = int(np.count_nonzero(profile == -1))
    if n_a + n_b != profile.size:
        raise ValueError("profile entries must be +1 or -1")
    return QueueCounts(n_a, n_b, 0)


def is_nondecreasing_cost(cost: Callable[[int], float], n: int) -> bool:
    """Check cost(1) <= cost(2) <= ... <= cost(n) by enumeration."""
    values = [cost(k) for k in range(1, n + 1)]
    return all(a <= b for a, b in zip(values, values[1:]))


def is_nash_brute_force(profile, cost: Callable[[int], float]) -> bool:
    """Exhaustive unilateral-deviation check for identical queue costs.

    An agent in a queue of size m pays cost(m); deviating lands it in a
    queue of size (other + 1). The profile is Nash iff no deviation is a
    strict improvement. Evaluates all N deviations exactly.
    """
    n_a, n_b, _ = counts_from_profile(profile)
    # All agents on one side are interchangeable, so two cases suffice.
    if n_a > 0 and cost(n_b + 1) < cost(n_a):
        return False
    if n_b > 0 and cost(n_a + 1) < cost(n_b):
        return False
    return True


def band_oracle_mismatches(n_max: int, cost: Callable[[int], float] = None):
    """Profiles where the band test and the deviation oracle disagree.

    Enumerates all 2^n profiles for every n in 2..n_max against a
    strictly increasing cost (default: occupancy itself). Returns a list
    of (n, profile tuple) mismatches; empty means the two routes agree
    everywhere.
    """
    if cost is None:
        cost = lambda m: m
    mismatches = []
    for n in range(2, n_max + 1):
        for profile in product((1, -1), repeat=n):
            band = in_nash_band(counts_from_profile(profile), n)
            oracle = is_nash_brute_force(profile, cost)
            if band != oracle:
                mismatches.append((n, profile))
    return mismatches


def hitting_time(trace) -> Optional[float]:
    """Earliest time the trace is inside the Nash band, or None if never."""
    hits = np.flatnonzero(trace.in_band)
    if hits.size == 0:
        return None
    return float(trace.t[hits[0]])


class PersistenceResult(NamedTuple):
    duration: float
    hit: bool


def persistence_after_last_hit(trace) -> PersistenceResult:
    """How long the system stays in the band after its last entry.

    The last entry is the final false->true transition of the in-band
    flag (epoch 0 counts as an entry when the trace starts in band).
    The stay runs until the first subsequent false flag, or to the end
    of the horizon if the flag never drops. Traces that never hit
    return duration 0 with hit=False.
    """
    flags = np.asarray(trace.in_band, dtype=bool)
    if not flags.any():
        return PersistenceResult(0.0, False)
    entries = np.flatnonzero(flags & ~np.concatenate(([False], flags[:-1])))
    k_last = int(entries[-1])
    later_exit = np.flatnonzero(~flags[k_last:])
    if later_exit.size == 0:
        return PersistenceResult(float(trace.t[-1] - trace.t[k_last]), True)
    k_exit = k_last + int(later_exit[0])
    return PersistenceResult(float(trace.t[k_exit] - trace.t[k_last]), True)


def switch_count(trace):
    """Per-agent A<->B switch counts and their mean over all agents.

    Joining from the pool and departing via service are not switches.
    """
    locs = np.asarray(trace.locations)
    prev, curr = locs[:-1], locs[1:]
    queued = np.abs(prev) == 1
    switched = queued & (curr == -prev)
    per_agent = switched.sum(axis=0)
    return per_agent, float(per_agent.mean())


class TrialStats(NamedTuple):
    hit: bool
    hitting_time: float      # nan when the trial never hit
    persistence: float       # 0 when the trial never hit
    switches_mean: float
    clamp_count: int


def trial_statistics(trace) -> TrialStats:
    tau = hitting_time(trace)
    persistence = persistence_after_last_hit(trace)
    _, switches_mean = switch_count(trace)
    return TrialStats(
        hit=tau is not None,
        hitting_time=float("nan") if tau is None else tau,
        persistence=persistence.duration,
        switches_mean=switches_mean,
        clamp_count=trace.clamp_count,
    )
