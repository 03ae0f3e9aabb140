"""Numeric evaluators for the sufficient drift conditions and hitting bound.

Outside the Nash band the queue imbalance magnitude is at least 2, so a
large enough environmental weight makes every agent's saturated drive
point at the cheaper queue with some margin. From that margin follow a
minimum decision-interval length and a uniform floor on post-interval
opinion magnitudes; combined with a waiting-pool join floor and an
opinion ceiling in the more expensive queue, they give a finite bound
on the expected number of epochs until the band is hit. This module
evaluates those quantities and checks the opinion floor empirically on
simulated trials.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import param_arrays
from .errors import ConfigurationError
from .queueing import DEPARTED, QUEUE_A, QUEUE_B, WAITING, run_trial, trial_rng

__all__ = [
    "MIN_OUTSIDE_IMBALANCE",
    "alignment_margin",
    "min_decision_interval",
    "opinion_floors",
    "band_entry_floor",
    "hitting_time_bound",
    "BoundReport",
    "build_bound_report",
    "TheoremInputs",
    "DriftBounds",
    "empirical_drift_bounds",
    "FloorValidation",
    "validate_opinion_floor",
]

# Minimum |queue imbalance| over states outside the band with an empty
# waiting pool (parity forces |n_A - n_B| >= 2 there).
MIN_OUTSIDE_IMBALANCE = 2


def _as_param_arrays(params, net):
    n = net.n if net is not None else len(params)
    return param_arrays(params, n)


def alignment_margin(params, net, include_diagonal=False) -> np.ndarray:
    """Per-agent slack by which the worst-case environmental drive wins.

    For agent i: gamma_i * 2 - omega_i * (u0_i + gain_i)
    - alpha_i * ||A||_inf. A positive minimum means the tanh argument is
    aligned with the cheaper queue whenever the state is outside the
    band with an empty pool. The norm is taken over off-diagonal entries
    by default, matching the coupling sum it bounds; pass
    include_diagonal=True for the full-row variant.
    """
    lam, omega, gamma, alpha, u0, gain = _as_param_arrays(params, net)
    norm = net.infinity_norm(include_diagonal=include_diagonal)
    return gamma * MIN_OUTSIDE_IMBALANCE - omega * (u0 + gain) - alpha * norm


def min_decision_interval(params, margin: float, net=None) -> float:
    """Shortest decision interval that guarantees a positive opinion floor.

    max_i (1/lam_i) * ln((lam_i + tanh(margin)) / tanh(margin)); requires
    a positive margin and strictly positive damping for every agent.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin!r}")
    lam = _margin_lams(params, net)
    nu = math.tanh(margin)
    return float(np.max(np.log((lam + nu) / nu) / lam))


def _margin_lams(params, net):
    if net is not None:
        lam = _as_param_arrays(params, net)[0]
    else:
        try:
            lam = param_arrays(params, len(params))[0]
        except TypeError:
            lam = np.array([params.lam], dtype=np.float64)
    if (lam <= 0).any():
        raise ValueError("every damping coefficient must be positive")
    return lam


def opinion_floors(params, margin: float, dt_decision: float, net=None) -> np.ndarray:
    """Per-agent floor on |z| after a decision interval spent outside the band.

    -exp(-lam_i * dt_D) + (tanh(margin)/lam_i) * (1 - exp(-lam_i * dt_D)).
    Non-positive values mean the interval is too short for the floor to
    bind; callers flag that rather than erroring.
    """
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin!r}")
    lam = _margin_lams(params, net)
    nu = math.tanh(margin)
    decay = np.exp(-lam * dt_decision)
    return -decay + (nu / lam) * (1.0 - decay)


def band_entry_floor(n: int, floor: float, cap: float) -> float:
    """Uniform lower bound on the one-epoch probability of entering the band.

    min over queue sizes q in 1..n and required switch counts s in 1..q
    of C(q, s) * floor^s * (1 - cap)^(q - s), evaluated by exact
    enumeration. floor bounds switch probabilities from below, cap
    bounds stay probabilities in the expensive queue from above.
    """
    if not 0 < floor <= 1:
        raise ValueError(f"opinion floor must lie in (0, 1], got {floor!r}")
    if not 0 < cap < 1:
        raise ValueError(f"opinion cap must lie in (0, 1), got {cap!r}")
    if n < 1:
        raise ValueError(f"agent count must be >= 1, got {n}")
    best = math.inf
    for q in range(1, n + 1):
        for s in range(1, q + 1):
            term = math.comb(q, s) * floor**s * (1.0 - cap) ** (q - s)
            if term < best:
                best = term
    return best


def hitting_time_bound(n: int, join_floor: float, entry_floor: float) -> float:
    """Expected-epoch bound: n / join_floor + 1 / entry_floor.

    join_floor is the guaranteed per-epoch join probability of at least
    one waiting agent; entry_floor bounds the per-epoch band entry
    probability once the pool is empty. Multiply by the decision
    interval for time units.
    """
    if join_floor <= 0:
        raise ValueError(f"join floor must be positive, got {join_floor!r}")
    if entry_floor <= 0:
        raise ValueError(f"entry floor must be positive, got {entry_floor!r}")
    return n / join_floor + 1.0 / entry_floor


@dataclass(frozen=True)
class TheoremInputs:
    """Inputs to the hitting bound that are not derivable in closed form."""

    n: int
    join_floor: float       # guaranteed waiting-pool join probability, (0, 1]
    expensive_cap: float    # opinion ceiling in the pricier queue, (0, 1)
    opinion_floor: float    # uniform |z| floor outside the band, (0, 1]

    def __post_init__(self):
        if not 0 < self.join_floor <= 1:
            raise ConfigurationError("join_floor must lie in (0, 1]")
        if not 0 < self.expensive_cap < 1:
            raise ConfigurationError("expensive_cap must lie in (0, 1)")
        if not 0 < self.opinion_floor <= 1:
            raise ConfigurationError("opinion_floor must lie in (0, 1]")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")

    def entry_floor(self) -> float:
        return band_entry_floor(self.n, self.opinion_floor, self.expensive_cap)

    def epoch_bound(self) -> float:
        return hitting_time_bound(self.n, self.join_floor, self.entry_floor())


@dataclass
class BoundReport:
    """Everything the drift-condition evaluators can say about one config."""

    min_outside_imbalance: int
    margins: np.ndarray
    margin: float
    condition_holds: bool
    decision_interval: float
    drive_floor: Optional[float] = None          # tanh(margin), when positive
    min_decision_interval: Optional[float] = None
    interval_long_enough: Optional[bool] = None
    opinion_floors: Optional[np.ndarray] = None
    opinion_floor: Optional[float] = None
    floor_positive: Optional[bool] = None
    margin_overridden: bool = False

    def to_dict(self) -> dict:
        def scrub(value):
            if isinstance(value, np.ndarray):
                return [float(v) for v in value]
            if isinstance(value, (np.floating, np.integer)):
                return value.item()
            return value

        return {k: scrub(v) for k, v in self.__dict__.items()}


def build_bound_report(
    params,
    net,
    dt_decision: float,
    margin_override: Optional[float] = None,
    include_diagonal: bool = False,
) -> BoundReport:
    """Evaluate margins, the interval threshold, and the opinion floor.

    margin_override substitutes a hypothetical margin for the computed
    one (useful for exploring interval thresholds when the computed
    condition fails); the report records the substitution.
    """
    margins = alignment_margin(params, net, include_diagonal=include_diagonal)
    computed_margin = float(margins.min())
    margin = computed_margin if margin_override is None else float(margin_override)
    report = BoundReport(
        min_outside_imbalance=MIN_OUTSIDE_IMBALANCE,
        margins=margins,
        margin=margin,
        condition_holds=computed_margin > 0,
        decision_interval=float(dt_decision),
        margin_overridden=margin_override is not None,
    )
    if margin > 0:
        report.drive_floor = math.tanh(margin)
        report.min_decision_interval = min_decision_interval(params, margin, net=net)
        report.interval_long_enough = dt_decision > report.min_decision_interval
        floors = opinion_floors(params, margin, dt_decision, net=net)
        report.opinion_floors = floors
        report.opinion_floor = float(floors.min())
        report.floor_positive = report.opinion_floor > 0
    return report


@dataclass(frozen=True)
class DriftBounds:
    """Empirical counterparts of the join floor and expensive-queue cap.

    join_floor: smallest post-interval |z| seen on any waiting agent
    while the pool was nonempty (a conservative stand-in for the
    guaranteed join probability). expensive_cap: largest post-interval
    |z| seen on any agent in the fuller queue while outside the band
    with an empty pool. Either is nan when no qualifying epoch exists.
    """

    join_floor: float
    expensive_cap: float


def empirical_drift_bounds(trace) -> DriftBounds:
    locs = trace.locations[:-1]
    z_next = np.abs(trace.opinions[1:])
    waiting = locs == WAITING
    pool_rows = waiting.any(axis=1)
    join_floor = float(z_next[waiting].min()) if pool_rows.any() else float("nan")

    imbalance = trace.n_a[:-1] - trace.n_b[:-1]
    outside = (~trace.in_band[:-1]) & (trace.n_w[:-1] == 0) & (imbalance != 0)
    cap = float("nan")
    if outside.any():
        expensive_code = np.where(imbalance > 0, QUEUE_A, QUEUE_B)
        in_expensive = locs == expensive_code[:, None]
        mask = in_expensive & outside[:, None]
        if mask.any():
            cap = float(z_next[mask].max())
    return DriftBounds(join_floor=join_floor, expensive_cap=cap)


@dataclass
class FloorValidation:
    """Outcome of the empirical opinion-floor check."""

    status: str                 # "ok" or "precondition_unmet"
    reason: Optional[str] = None
    trials: int = 0
    epochs_checked: int = 0
    agents_checked: int = 0
    violations: int = 0
    examples: Optional[list] = None
    margin: Optional[float] = None
    opinion_floor: Optional[float] = None
    min_decision_interval: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.status == "ok" and self.violations == 0


# Reserved Philox stream indices (far above any realistic trial count):
# the fixed-mask stream and the validation start-state stream.
MASK_STREAM_INDEX = 2**63
SPLIT_STREAM_INDEX = 2**63 + 1

_FLOOR_SLACK = 1e-9  # integration slack on the |z| >= floor assertion


def _imbalanced_splits(rng, n, trials):
    """Queue-A occupancy for each trial start, drawn outside the band."""
    allowed = [k for k in range(n + 1) if abs(2 * k - n) > n % 2]
    return rng.choice(np.array(allowed), size=trials, replace=True)


def validate_opinion_floor(
    config,
    trials: int = 100,
    master_seed: Optional[int] = None,
    max_examples: int = 20,
) -> FloorValidation:
    """Monte Carlo check of the post-interval opinion guarantee.

    Runs trials started from random all-queued, out-of-band splits and
    asserts, at every epoch whose pre-state lies outside the band, that
    every non-departed agent's next opinion points at the cheaper queue
    with magnitude at least the computed floor (minus integration
    slack). Preconditions (positive margin, fully informed population,
    long enough decision interval) short-circuit to a skipped report.
    """
    params = config.agent_params
    net = config.social_network
    margins = alignment_margin(params, net)
    margin = float(margins.min())
    if margin <= 0:
        return FloorValidation(
            status="precondition_unmet",
            reason=f"alignment margin is {margin:.6g} (needs > 0)",
            margin=margin,
        )
    if config.rho > 0:
        return FloorValidation(
            status="precondition_unmet",
            reason="every agent must see the imbalance (rho = 0)",
            margin=margin,
        )
    threshold = min_decision_interval(params, margin, net=net)
    if config.dt_decision <= threshold:
        return FloorValidation(
            status="precondition_unmet",
            reason=(
                f"decision interval {config.dt_decision!r} does not exceed "
                f"the threshold {threshold:.6g}"
            ),
            margin=margin,
            min_decision_interval=threshold,
        )
    floor = float(opinion_floors(params, margin, config.dt_decision, net=net).min())

    seed = config.master_seed if master_seed is None else master_seed
    split_rng = trial_rng(seed, SPLIT_STREAM_INDEX)
    splits = _imbalanced_splits(split_rng, config.n, trials)

    epochs_checked = 0
    agents_checked = 0
    violations = 0
    examples = []
    for trial_index in range(trials):
        n_a0 = int(splits[trial_index])
        start = np.full(config.n, QUEUE_B, dtype=np.int8)
        order = split_rng.permutation(config.n)
        start[order[:n_a0]] = QUEUE_A
        trace = run_trial(
            config, seed, trial_index, initial_locations=start
        )
        outside = ~trace.in_band[:-1]
        imbalance = trace.n_a[:-1] - trace.n_b[:-1]
        for k in np.flatnonzero(outside):
            b_k = imbalance[k]
            if b_k == 0:
                # outside the band only via a nonempty pool; the drive
                # guarantee needs |imbalance| >= 2, so nothing to check
                continue
            cheaper = QUEUE_B if b_k > 0 else QUEUE_A
            alive = trace.locations[k] != DEPARTED
            z_next = trace.opinions[k + 1]
            epochs_checked += 1
            agents_checked += int(alive.sum())
            aligned = np.sign(z_next) == cheaper
            big_enough = np.abs(z_next) >= floor - _FLOOR_SLACK
            bad = alive & ~(aligned & big_enough)
            if bad.any():
                violations += int(bad.sum())
                for agent in np.flatnonzero(bad)[: max(0, max_examples - len(examples))]:
                    examples.append(
                        {
                            "trial": trial_index,
                            "epoch": int(k) + 1,
                            "agent": int(agent),
                            "opinion": float(z_next[agent]),
                            "required_sign": int(cheaper),
                            "floor": floor,
                            "imbalance": int(b_k),
                            "counts": [int(trace.n_a[k]), int(trace.n_b[k]), int(trace.n_w[k])],
                            "opinions": [float(v) for v in z_next],
                        }
                    )
    return FloorValidation(
        status="ok",
        trials=trials,
        epochs_checked=epochs_checked,
        agents_checked=agents_checked,
        violations=violations,
        examples=examples,
        margin=margin,
        opinion_floor=floor,
        min_decision_interval=threshold,
    )
