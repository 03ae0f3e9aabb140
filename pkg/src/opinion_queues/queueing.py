"""Epoch-by-epoch evolution of the joint opinion/location Markov chain.

Protocol per decision epoch: freeze each agent's environmental input
(the signed queue imbalance, or 0 for masked agents), integrate the
opinion ODEs across the decision interval, then execute all join/switch
draws simultaneously against the pre-epoch locations, then apply
Poisson service. Locations move on a one-way street
waiting -> queue -> departed: the pool is never re-entered and service
removal is absorbing.
"""

from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .config import SimConfig
from .dynamics import clamp_opinions, integrate_decision_interval, param_arrays
from .errors import ConfigurationError, IntegrationError

__all__ = [
    "WAITING",
    "QUEUE_A",
    "QUEUE_B",
    "DEPARTED",
    "ServiceConfig",
    "SystemState",
    "TrialTrace",
    "MoveEvent",
    "environment_input",
    "environment_inputs",
    "apply_maneuvers",
    "maneuver_draws",
    "service_step",
    "epoch_step",
    "run_trial",
    "trial_rng",
]

# Location codes; 9 marks agents served and gone (it has no role in the
# dynamics, only in bookkeeping and the trace CSV).
WAITING = _kernels.LOC_WAITING
QUEUE_A = _kernels.LOC_QUEUE_A
QUEUE_B = _kernels.LOC_QUEUE_B
DEPARTED = _kernels.LOC_DEPARTED


@dataclass(frozen=True)
class ServiceConfig:
    """Poisson service rates (events per unit time) for each queue."""

    mu_a: float = 0.0
    mu_b: float = 0.0

    def __post_init__(self):
        if self.mu_a < 0 or self.mu_b < 0:
            raise ConfigurationError("service rates must be nonnegative")

    @property
    def active(self) -> bool:
        return self.mu_a > 0 or self.mu_b > 0


@dataclass
class SystemState:
    """Joint Markov state at one decision epoch.

    `informed` marks agents who see the queue imbalance; `rng` is the
    trial's deterministic generator (owned by exactly one trial).
    """

    epoch: int
    time: float
    opinions: np.ndarray
    locations: np.ndarray
    informed: np.ndarray
    rng: np.random.Generator
    clamp_count: int = 0

    @property
    def n(self) -> int:
        return self.locations.shape[0]

    @property
    def n_a(self) -> int:
        return int(np.count_nonzero(self.locations == QUEUE_A))

    @property
    def n_b(self) -> int:
        return int(np.count_nonzero(self.locations == QUEUE_B))

    @property
    def n_w(self) -> int:
        return int(np.count_nonzero(self.locations == WAITING))

    @property
    def n_departed(self) -> int:
        return int(np.count_nonzero(self.locations == DEPARTED))

    @property
    def imbalance(self) -> int:
        return self.n_a - self.n_b


def environment_input(state: SystemState, i: int) -> float:
    """Signed queue imbalance seen by agent i (0 if the agent is masked)."""
    if not 0 <= i < state.n:
        raise IndexError(f"agent index {i} out of range for {state.n} agents")
    return float(state.imbalance) if state.informed[i] else 0.0


def environment_inputs(state: SystemState) -> np.ndarray:
    """Per-agent environmental input vector at the epoch start."""
    return np.where(state.informed, float(state.imbalance), 0.0)


def apply_maneuvers(locations, z_next, uniforms) -> np.ndarray:
    """Resolve all join/switch draws simultaneously.

    Moves depend only on the pre-epoch locations: a waiting agent joins
    the queue matching sign(z) when its uniform is <= |z|; a queued
    agent whose opinion sign disagrees with its queue switches under the
    same draw rule. Agents with z == 0 never move; departed agents are
    untouched (their uniform entries are ignored).
    """
    locations = np.asarray(locations)
    z_next = np.asarray(z_next, dtype=np.float64)
    if np.abs(z_next).max(initial=0.0) > 1.0:
        raise ValueError("opinions must be clamped to [-1, 1] before maneuvers")
    magnitude = np.abs(z_next)
    target = np.sign(z_next).astype(np.int8)
    success = (uniforms <= magnitude) & (target != 0)
    new = locations.copy()
    joins = (locations == WAITING) & success
    switches = ((locations == QUEUE_A) | (locations == QUEUE_B)) \
        & success & (target != locations)
    moved = joins | switches
    new[moved] = target[moved]
    return new


def maneuver_draws(state: SystemState, z_next) -> np.ndarray:
    """Draw one uniform per non-departed agent (ascending index) and move.

    Departed agents consume no randomness, which keeps the trial's
    random stream layout independent of how uniforms are batched.
    """
    alive = state.locations != DEPARTED
    uniforms = np.ones(state.n)  # placeholder entries for departed agents
    uniforms[alive] = state.rng.random(int(alive.sum()))
    return apply_maneuvers(state.locations, z_next, uniforms)


def service_step(state: SystemState, service: ServiceConfig, dt_decision: float) -> SystemState:
    """Serve Poisson(mu_q * dt_D) agents per queue, uniformly at random.

    Queue A is drawn before queue B. A zero-rate queue consumes no
    randomness at all (the count would be identically zero), so the
    common no-service setup draws nothing here.
    """
    locations = state.locations.copy()
    for code, rate in ((QUEUE_A, service.mu_a), (QUEUE_B, service.mu_b)):
        lam = rate * dt_decision
        if lam <= 0:
            continue
        count = int(state.rng.poisson(lam))
        members = np.flatnonzero(locations == code)
        take = min(count, members.size)
        if take > 0:
            served = state.rng.choice(members, size=take, replace=False)
            locations[served] = DEPARTED
    return replace(state, locations=locations)


def epoch_step(
    state: SystemState,
    params,
    net,
    service: ServiceConfig,
    dt_decision: float,
    dt: float,
) -> SystemState:
    """One full decision epoch: input, integrate, move, serve, advance.

    Opinions of departed agents keep evolving and keep feeding their
    neighbors' social terms (the ODE is location-blind); only their
    maneuvers cease.
    """
    b = environment_inputs(state)
    try:
        z_next = integrate_decision_interval(
            state.opinions, params, net, b, dt_decision, dt
        )
    except IntegrationError as exc:
        exc.epoch = state.epoch + 1
        raise
    z_next, n_clamped = clamp_opinions(z_next)
    moved = replace(state, opinions=z_next, clamp_count=state.clamp_count + n_clamped)
    moved.locations = maneuver_draws(state, z_next)
    served = service_step(moved, service, dt_decision)
    served.epoch = state.epoch + 1
    served.time = served.epoch * dt_decision
    return served


class MoveEvent(NamedTuple):
    kind: str     # "join", "switch", or "service"
    epoch: int    # epoch at whose boundary the move happened (1-based)
    agent: int
    source: int
    dest: int


@dataclass
class TrialTrace:
    """Per-epoch record of one trial (one row per epoch boundary)."""

    t: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    n_w: np.ndarray
    in_band: np.ndarray
    opinions: np.ndarray     # (epochs + 1, n)
    locations: np.ndarray    # (epochs + 1, n) int8
    clamp_count: int = 0
    dt_decision: float = 0.0

    @property
    def n(self) -> int:
        return self.opinions.shape[1]

    @property
    def epochs(self) -> int:
        return self.opinions.shape[0] - 1

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @classmethod
    def from_arrays(cls, opinions, locations, dt_decision, clamp_count=0):
        """Build a trace (counts, band flags) from raw history arrays."""
        opinions = np.asarray(opinions, dtype=np.float64)
        locations = np.asarray(locations, dtype=np.int8)
        records = opinions.shape[0]
        t = np.arange(records) * dt_decision
        n_a = (locations == QUEUE_A).sum(axis=1)
        n_b = (locations == QUEUE_B).sum(axis=1)
        n_w = (locations == WAITING).sum(axis=1)
        # Band membership is judged among agents still in the system;
        # with zero service rates that is always the full population.
        active = n_a + n_b + n_w
        in_band = (n_w == 0) & (np.abs(n_a - n_b) <= active % 2)
        return cls(
            t=t,
            n_a=n_a.astype(np.int64),
            n_b=n_b.astype(np.int64),
            n_w=n_w.astype(np.int64),
            in_band=in_band,
            opinions=opinions,
            locations=locations,
            clamp_count=clamp_count,
            dt_decision=float(dt_decision),
        )

    @cached_property
    def events(self):
        """Join/switch/service log derived from the location history."""
        out = []
        prev = self.locations[:-1]
        curr = self.locations[1:]
        changed = np.argwhere(prev != curr)
        for k, agent in changed:
            src, dst = int(prev[k, agent]), int(curr[k, agent])
            if src == WAITING:
                kind = "join"
            elif dst == DEPARTED:
                kind = "service"
            else:
                kind = "switch"
            out.append(MoveEvent(kind, int(k) + 1, int(agent), src, dst))
        return out

    def header(self):
        zs = [f"z_{i}" for i in range(self.n)]
        locs = [f"loc_{i}" for i in range(self.n)]
        return ["t", "n_A", "n_B", "n_W", "in_band"] + zs + locs

    def to_csv(self, path):
        """Write the trace: t,n_A,n_B,n_W,in_band,z_0..z_{n-1},loc_0..loc_{n-1}."""
        lines = [",".join(self.header())]
        for k in range(self.t.size):
            cells = [
                repr(float(self.t[k])),
                str(int(self.n_a[k])),
                str(int(self.n_b[k])),
                str(int(self.n_w[k])),
                str(int(self.in_band[k])),
            ]
            cells += [repr(float(z)) for z in self.opinions[k]]
            cells += [str(int(l)) for l in self.locations[k]]
            lines.append(",".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
        if not rows:
            raise ValueError(f"{path}: empty trace file")
        header = rows[0]
        if len(header) < 7 or (len(header) - 5) % 2 != 0:
            raise ValueError(f"{path}: malformed trace header ({len(header)} columns)")
        n = (len(header) - 5) // 2
        data = rows[1:]
        if not data:
            raise ValueError(f"{path}: trace has a header but no records")
        t = np.array([float(r[0]) for r in data])
        opinions = np.array([[float(v) for v in r[5 : 5 + n]] for r in data])
        locations = np.array([[int(v) for v in r[5 + n :]] for r in data], dtype=np.int8)
        dt_decision = float(t[1] - t[0]) if t.size > 1 else 0.0
        trace = cls.from_arrays(opinions, locations, dt_decision)
        trace.t = t
        return trace


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based generator for one trial: Philox keyed by (seed, index)."""
    key = np.array([master_seed, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _initial_state(config, rng, informed_mask, initial_locations):
    n = config.n
    z0 = rng.normal(0.0, config.z0_sigma, n)
    np.clip(z0, -1.0, 1.0, out=z0)
    if informed_mask is not None:
        informed = np.asarray(informed_mask, dtype=bool).copy()
        if informed.shape != (n,):
            raise ConfigurationError(f"informed mask must have shape ({n},)")
    else:
        informed = np.ones(n, dtype=bool)
        if config.n_masked > 0:
            masked = rng.choice(n, size=config.n_masked, replace=False)
            informed[masked] = False
    if initial_locations is not None:
        loc0 = np.asarray(initial_locations, dtype=np.int8).copy()
        if loc0.shape != (n,):
            raise ConfigurationError(f"initial locations must have shape ({n},)")
        if not np.isin(loc0, (WAITING, QUEUE_A, QUEUE_B, DEPARTED)).all():
            raise ConfigurationError("initial locations contain an unknown code")
    else:
        loc0 = np.zeros(n, dtype=np.int8)
    return z0, informed, loc0


def run_trial(
    config: SimConfig,
    master_seed: Optional[int] = None,
    trial_index: int = 0,
    *,
    informed_mask=None,
    initial_locations=None,
    engine: str = "auto",
) -> TrialTrace:
    """Run one trial to the horizon and return its trace.

    The trial's random stream is fully determined by (master_seed,
    trial_index) and is consumed in a fixed order: initial opinions
    (one normal per agent, clamped to [-1, 1]), then the masked-agent
    selection when the config masks anyone and no explicit mask is
    passed, then per epoch one uniform per non-departed agent followed
    by any service draws. Identical inputs give bit-identical traces.

    engine: "auto" picks the compiled epoch loop when no service is
    configured, "python" forces the step-by-step composition (same
    stream, same results), "compiled" insists on the fast path.
    """
    seed = config.master_seed if master_seed is None else master_seed
    rng = trial_rng(seed, trial_index)
    z0, informed, loc0 = _initial_state(config, rng, informed_mask, initial_locations)
    service = ServiceConfig(config.mu_a, config.mu_b)
    n_epochs = config.epochs
    n_steps = config.substeps
    compiled_ok = not service.active and not (loc0 == DEPARTED).any()
    if engine == "compiled" and not compiled_ok:
        raise ConfigurationError(
            "the compiled engine supports only zero service rates and no "
            "pre-departed agents"
        )
    use_compiled = engine == "compiled" or (engine == "auto" and compiled_ok)
    if engine not in ("auto", "python", "compiled"):
        raise ConfigurationError(f"unknown engine {engine!r}")

    if use_compiled:
        lam, omega, gamma, alpha, u0, gain = param_arrays(config.agent_params, config.n)
        coupling = config.social_network.coupling()
        # One block draw: same stream as per-epoch draws with everyone alive.
        uniforms = rng.random((n_epochs, config.n))
        zs, locs, clamped, bad_epoch = _kernels.run_epochs_no_service(
            z0, informed, gamma, uniforms, lam, omega, alpha, u0, gain,
            coupling, config.dt, n_steps, n_epochs, loc0,
        )
        if bad_epoch:
            raise IntegrationError(
                f"non-finite opinion during epoch {bad_epoch}",
                epoch=bad_epoch,
                opinions=zs[bad_epoch - 1],
            )
    else:
        params = config.agent_params
        net = config.social_network
        zs = np.empty((n_epochs + 1, config.n))
        locs = np.empty((n_epochs + 1, config.n), dtype=np.int8)
        state = SystemState(0, 0.0, z0, loc0, informed, rng)
        zs[0], locs[0] = state.opinions, state.locations
        for k in range(n_epochs):
            state = epoch_step(state, params, net, service, config.dt_decision, config.dt)
            zs[k + 1], locs[k + 1] = state.opinions, state.locations
        clamped = state.clamp_count

    return TrialTrace.from_arrays(zs, locs, config.dt_decision, clamp_count=int(clamped))
