"""Simulation configuration: defaults, JSON loading, validation.

Config files are flat JSON. Every field has a default matching the
reference experiment (10 agents, horizon 30, decision interval 0.1,
integrator step 0.01, zero service rates, initial opinions N(0, 0.1^2)),
so an empty config runs the standard setup.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import AgentParams, SocialNetwork, substep_count
from .errors import ConfigurationError

__all__ = ["SimConfig", "load_config", "NETWORK_KINDS"]

NETWORK_KINDS = ("all_positive", "all_negative")

# JSON key -> SimConfig attribute. "lambda" is reserved in python, and the
# remaining renames keep attribute names pythonic.
_JSON_KEYS = {
    "N": "n",
    "T": "t_horizon",
    "dt_D": "dt_decision",
    "dt": "dt",
    "lambda": "lam",
    "omega": "omega",
    "gamma": "gamma",
    "alpha": "alpha",
    "u0": "u0",
    "K": "gain",
    "network": "network",
    "rho": "rho",
    "mu_A": "mu_a",
    "mu_B": "mu_b",
    "trials": "trials",
    "master_seed": "master_seed",
    "z0_sigma": "z0_sigma",
    "fixed_mask": "fixed_mask",
}


@dataclass(frozen=True)
class SimConfig:
    n: int = 10
    t_horizon: float = 30.0
    dt_decision: float = 0.1
    dt: float = 0.01
    lam: object = 1.0       # scalar or length-n list for heterogeneous agents
    omega: object = 1.0
    gamma: object = 0.5
    alpha: object = 0.2
    u0: object = 1.25
    gain: object = 0.25
    network: object = "all_negative"   # kind name or explicit matrix
    rho: float = 0.0
    mu_a: float = 0.0
    mu_b: float = 0.0
    trials: int = 10000
    master_seed: int = 1234
    z0_sigma: float = 0.1
    fixed_mask: bool = False

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.n!r}")
        if self.t_horizon <= 0:
            raise ConfigurationError(f"T must be positive, got {self.t_horizon!r}")
        self.epochs  # validates T / dt_D
        self.substeps  # validates dt_D / dt
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigurationError(f"rho must lie in [0, 1], got {self.rho!r}")
        if self.mu_a < 0 or self.mu_b < 0:
            raise ConfigurationError("mu_A and mu_B must be nonnegative")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigurationError(
                f"master_seed must be an integer in [0, 2^64), got {self.master_seed!r}"
            )
        if self.z0_sigma < 0:
            raise ConfigurationError(f"z0_sigma must be nonnegative, got {self.z0_sigma!r}")
        self.agent_params  # validates per-agent coefficient values
        self.social_network  # validates the network spec

    @property
    def epochs(self) -> int:
        """Decision epoch count M = T / dt_D (must be integral)."""
        try:
            return substep_count(self.t_horizon, self.dt_decision)
        except ConfigurationError:
            raise ConfigurationError(
                f"dt_D ({self.dt_decision!r}) must evenly divide T ({self.t_horizon!r})"
            ) from None

    @property
    def substeps(self) -> int:
        return substep_count(self.dt_decision, self.dt)

    @property
    def agent_params(self):
        """Per-agent AgentParams list (scalars broadcast to all agents)."""
        columns = []
        for name in ("lam", "omega", "gamma", "alpha", "u0", "gain"):
            value = getattr(self, name)
            if isinstance(value, (list, tuple, np.ndarray)):
                if len(value) != self.n:
                    raise ConfigurationError(
                        f"{name} must be a scalar or a length-{self.n} list, "
                        f"got length {len(value)}"
                    )
                columns.append([float(v) for v in value])
            else:
                columns.append([float(value)] * self.n)
        return [
            AgentParams(lam=l, omega=w, gamma=g, alpha=a, u0=u, gain=k)
            for l, w, g, a, u, k in zip(*columns)
        ]

    @property
    def social_network(self) -> SocialNetwork:
        if self.network == "all_positive":
            return SocialNetwork.all_positive(self.n)
        if self.network == "all_negative":
            return SocialNetwork.all_negative(self.n)
        if isinstance(self.network, str):
            raise ConfigurationError(
                f"network must be one of {NETWORK_KINDS} or an explicit matrix, "
                f"got {self.network!r}"
            )
        net = SocialNetwork(np.asarray(self.network))
        if net.n != self.n:
            raise ConfigurationError(
                f"network matrix is {net.n}x{net.n} but N = {self.n}"
            )
        return net

    @property
    def n_masked(self) -> int:
        """Number of agents whose environmental input is zeroed (nearest int)."""
        return round(self.rho * self.n)

    def with_overrides(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        out = {}
        for key, attr in _JSON_KEYS.items():
            value = getattr(self, attr)
            if isinstance(value, np.ndarray):
                value = value.tolist()
            out[key] = value
        return out


def _from_dict(data: dict) -> SimConfig:
    kwargs = {}
    for key, value in data.items():
        attr = _JSON_KEYS.get(key)
        if attr is None:
            raise ConfigurationError(f"unknown config field {key!r}")
        kwargs[attr] = value
    for int_field in ("n", "trials", "master_seed"):
        if int_field in kwargs:
            value = kwargs[int_field]
            if isinstance(value, float) and value.is_integer():
                kwargs[int_field] = int(value)
    return SimConfig(**kwargs)


def load_config(path) -> SimConfig:
    """Read and validate a flat-JSON config; missing fields use defaults."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"could not parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config root must be a JSON object, got {type(data).__name__}")
    return _from_dict(data)
