"""Agent-based two-queue selection driven by nonlinear opinion dynamics.

Agents carry a continuously evolving opinion in [-1, 1] whose sign picks
a queue and whose magnitude gates probabilistic join/switch maneuvers at
discrete decision epochs. The package provides the ODE integrator, the
epoch-level Markov chain, congestion-game classification of queue
configurations, drift-condition evaluators for hitting-time bounds, and
a seeded Monte Carlo sweep harness with a CLI.
"""

from .bounds import (
    BoundReport,
    TheoremInputs,
    alignment_margin,
    band_entry_floor,
    build_bound_report,
    empirical_drift_bounds,
    hitting_time_bound,
    min_decision_interval,
    opinion_floors,
    validate_opinion_floor,
)
from .config import SimConfig, load_config
from .dynamics import (
    AgentParams,
    SocialNetwork,
    attention,
    critical_attention,
    critical_gain,
    integrate_decision_interval,
    largest_eigenvalue,
    opinion_rhs,
)
from .errors import ConfigurationError, IntegrationError
from .game import (
    QueueCounts,
    hitting_time,
    in_nash_band,
    is_nash_brute_force,
    nash_imbalance_limit,
    persistence_after_last_hit,
    switch_count,
    trial_statistics,
)
from .harness import AggregateStats, CellResult, emit_outputs, run_cell, run_sweep
from .queueing import (
    DEPARTED,
    QUEUE_A,
    QUEUE_B,
    WAITING,
    ServiceConfig,
    SystemState,
    TrialTrace,
    environment_input,
    epoch_step,
    maneuver_draws,
    run_trial,
    service_step,
)

__version__ = "0.1.0"
