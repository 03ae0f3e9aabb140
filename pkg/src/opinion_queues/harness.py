"""Seeded Monte Carlo sweeps over (network, masked-fraction) grids.

Each grid cell runs `trials` independent trials and aggregates the
standard statistics: mean and standard deviation of the band hitting
time over hitting trials, the fraction of trials that hit, the mean
per-agent switch count over all trials, and the mean post-last-entry
persistence over hitting trials. Cells are deterministic functions of
the master seed: every trial owns a counter-based stream keyed by
(cell seed, trial index) and results are reduced in trial order, so the
worker count never changes any output byte.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bounds import MASK_STREAM_INDEX
from .config import SimConfig, load_config  # noqa: F401  (re-exported)
from .errors import ConfigurationError
from .game import TrialStats, trial_statistics
from .queueing import TrialTrace, run_trial, trial_rng

__all__ = [
    "SimConfig",
    "load_config",
    "AggregateStats",
    "CellResult",
    "aggregate_trials",
    "run_cell",
    "run_sweep",
    "emit_outputs",
    "read_summary",
    "resolve_workers",
    "SUMMARY_COLUMNS",
]

SUMMARY_COLUMNS = (
    "network",
    "rho",
    "tau_mean",
    "tau_std",
    "r",
    "switches_mean",
    "persistence_mean",
)

WORKERS_ENV_VAR = "OPINION_QUEUES_WORKERS"


@dataclass(frozen=True)
class AggregateStats:
    """Cell-level statistics; hitting-time fields are nan when nothing hit."""

    tau_mean: float
    tau_std: float
    hit_fraction: float
    switches_mean: float
    persistence_mean: float
    n_hit: int
    n_trials: int


def aggregate_trials(stats: Sequence[TrialStats]) -> AggregateStats:
    """Reduce per-trial statistics in the given (trial index) order.

    Hitting-time mean/std and persistence average over hitting trials
    only; the hit fraction and switch mean cover every trial. With no
    hits the hitting-time fields stay nan rather than masquerading as 0.
    """
    n_trials = len(stats)
    if n_trials == 0:
        raise ValueError("cannot aggregate zero trials")
    taus = np.array([s.hitting_time for s in stats if s.hit])
    n_hit = taus.size
    tau_mean = float(taus.mean()) if n_hit else float("nan")
    tau_std = float(taus.std(ddof=1)) if n_hit > 1 else float("nan")
    persistence = np.array([s.persistence for s in stats if s.hit])
    persistence_mean = float(persistence.mean()) if n_hit else float("nan")
    switches = np.array([s.switches_mean for s in stats])
    return AggregateStats(
        tau_mean=tau_mean,
        tau_std=tau_std,
        hit_fraction=n_hit / n_trials,
        switches_mean=float(switches.mean()),
        persistence_mean=persistence_mean,
        n_hit=int(n_hit),
        n_trials=n_trials,
    )


@dataclass
class CellResult:
    network: str
    rho: float
    stats: AggregateStats
    sample_trace: Optional[TrialTrace] = None
    sample_index: int = 0


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count: env var OPINION_QUEUES_WORKERS wins over the argument."""
    env = os.environ.get(WORKERS_ENV_VAR)
    if env is not None:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigurationError(
                f"{WORKERS_ENV_VAR} must be an integer, got {env!r}"
            ) from None
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {workers}")
    return workers


def _fixed_mask(config: SimConfig, cell_seed: int):
    """Cell-wide informed mask drawn once from a reserved stream index."""
    if config.n_masked == 0:
        return np.ones(config.n, dtype=bool)
    rng = trial_rng(cell_seed, MASK_STREAM_INDEX)
    informed = np.ones(config.n, dtype=bool)
    informed[rng.choice(config.n, size=config.n_masked, replace=False)] = False
    return informed


def run_cell(
    config: SimConfig,
    cell_seed: Optional[int] = None,
    workers: int = 1,
    keep_sample: bool = True,
):
    """Run all trials of one grid cell; returns (AggregateStats, sample trace).

    Trials run on a thread pool (the epoch kernel releases the GIL);
    statistics are reduced in trial order regardless of completion
    order, so the result is a pure function of (config, cell_seed).
    """
    seed = config.master_seed if cell_seed is None else cell_seed
    mask = _fixed_mask(config, seed) if config.fixed_mask else None

    def one(trial_index: int):
        trace = run_trial(config, seed, trial_index, informed_mask=mask)
        stats = trial_statistics(trace)
        return stats, (trace if keep_sample and trial_index == 0 else None)

    if workers <= 1:
        outcomes = [one(t) for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(config.trials)))
    sample = outcomes[0][1]
    return aggregate_trials([s for s, _ in outcomes]), sample


def cell_seed(master_seed: int, cell_index: int) -> int:
    """Derived 64-bit seed for one grid cell."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(cell_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def run_sweep(
    config: SimConfig,
    networks: Sequence[str] = ("all_positive", "all_negative"),
    rhos: Sequence[float] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
    workers: Optional[int] = None,
    keep_samples: bool = True,
    progress=None,
):
    """Run the full (network x rho) grid; returns a list of CellResult.

    Cell order is networks-major. Each cell gets its own derived seed so
    no two cells share random streams. `progress`, when given, is called
    with (cell_index, total, network, rho) before each cell runs.
    """
    workers = resolve_workers(workers)
    cells = [(net, rho) for net in networks for rho in rhos]
    results = []
    for index, (net, rho) in enumerate(cells):
        if progress is not None:
            progress(index, len(cells), net, rho)
        cfg = config.with_overrides(network=net, rho=float(rho))
        stats, sample = run_cell(
            cfg, cell_seed(config.master_seed, index), workers, keep_sample=keep_samples
        )
        results.append(
            CellResult(network=str(net), rho=float(rho), stats=stats, sample_trace=sample)
        )
    return results


def _cell_text(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def emit_outputs(results: Sequence[CellResult], out_dir) -> dict:
    """Write summary.csv, summary.json, and one sample trace per cell.

    Missing statistics (cells where no trial hit) emit as empty CSV
    fields / JSON nulls. Returns the written paths keyed by kind.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "summary.csv")
    rows = []
    for res in results:
        s = res.stats
        rows.append(
            [
                res.network,
                repr(float(res.rho)),
                _cell_text(s.tau_mean),
                _cell_text(s.tau_std),
                repr(float(s.hit_fraction)),
                repr(float(s.switches_mean)),
                _cell_text(s.persistence_mean),
            ]
        )
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(rows)

    def nan_to_none(value: float):
        return None if math.isnan(value) else value

    json_path = os.path.join(out_dir, "summary.json")
    payload = [
        {
            "network": res.network,
            "rho": res.rho,
            "tau_mean": nan_to_none(res.stats.tau_mean),
            "tau_std": nan_to_none(res.stats.tau_std),
            "r": res.stats.hit_fraction,
            "switches_mean": res.stats.switches_mean,
            "persistence_mean": nan_to_none(res.stats.persistence_mean),
            "n_hit": res.stats.n_hit,
            "n_trials": res.stats.n_trials,
        }
        for res in results
    ]
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")

    trace_paths = []
    for res in results:
        if res.sample_trace is None:
            continue
        name = f"trace_{res.network}_{res.rho:g}_{res.sample_index}.csv"
        path = os.path.join(out_dir, name)
        res.sample_trace.to_csv(path)
        trace_paths.append(path)
    return {"summary_csv": csv_path, "summary_json": json_path, "traces": trace_paths}


def read_summary(path):
    """Parse summary.csv back into row dicts (empty cells become nan)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ValueError(f"{path}: unexpected summary columns {reader.fieldnames}")
        rows = []
        for row in reader:
            parsed = {"network": row["network"]}
            for key in SUMMARY_COLUMNS[1:]:
                text = row[key]
                parsed[key] = float(text) if text else float("nan")
            rows.append(parsed)
    return rows
