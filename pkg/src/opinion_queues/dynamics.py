"""Continuous opinion dynamics between decision epochs.

Each agent carries a scalar opinion z in [-1, 1] whose sign encodes the
preferred queue (+ for A, - for B) and whose magnitude acts as the
maneuver success probability. Opinions evolve under damping, a
saturated self/social feedback term with state-dependent attention, and
a (piecewise-constant) environmental input:

    dz_i/dt = -lam_i z_i
              + tanh(omega_i u_i z_i + alpha_i sum_{j != i} a_ij z_j
                     - gamma_i b_i),     u_i = u0_i + gain_i z_i^2

The attention threshold at which the neutral state destabilizes
(pitchfork) and the gain below which the pitchfork is supercritical are
exposed as closed-form helpers for homogeneous populations.
"""

from dataclasses import dataclass
from math import tanh

import numpy as np

from . import _kernels
from .errors import ConfigurationError, IntegrationError

__all__ = [
    "AgentParams",
    "SocialNetwork",
    "attention",
    "opinion_rhs",
    "integrate_decision_interval",
    "largest_eigenvalue",
    "critical_attention",
    "critical_gain",
    "clamp_opinions",
    "substep_count",
    "param_arrays",
]


@dataclass(frozen=True)
class AgentParams:
    """Coefficients of one agent's opinion ODE.

    lam: damping (>= 0, 1/time); omega: self-reinforcement weight (>= 0);
    gamma: environmental-input weight; alpha: social-influence weight
    (>= 0); u0: basal attention; gain: attention gain on z^2 (>= 0).
    """

    lam: float = 1.0
    omega: float = 1.0
    gamma: float = 0.5
    alpha: float = 0.2
    u0: float = 1.25
    gain: float = 0.25

    def __post_init__(self):
        for name in ("lam", "omega", "gamma", "alpha", "u0", "gain"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ConfigurationError(f"AgentParams.{name} must be finite, got {value!r}")
        for name in ("lam", "omega", "alpha", "gain"):
            if getattr(self, name) < 0:
                raise ConfigurationError(
                    f"AgentParams.{name} must be nonnegative, got {getattr(self, name)!r}"
                )


def param_arrays(params, n):
    """Broadcast AgentParams (one shared or a length-n sequence) to arrays.

    Returns (lam, omega, gamma, alpha, u0, gain) float64 arrays of length n.
    """
    if isinstance(params, AgentParams):
        params = [params] * n
    params = list(params)
    if len(params) != n:
        raise ConfigurationError(f"expected {n} per-agent params, got {len(params)}")
    fields = ("lam", "omega", "gamma", "alpha", "u0", "gain")
    return tuple(
        np.array([getattr(p, f) for p in params], dtype=np.float64) for f in fields
    )


@dataclass(frozen=True, eq=False)
class SocialNetwork:
    """Signed all-pairs influence matrix with entries in {-1, 0, +1}.

    The matrix is stored as given (diagonal included); the dynamics'
    coupling sum always excludes the diagonal, which `coupling()`
    enforces by zeroing it.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigurationError(f"network matrix must be square, got shape {m.shape}")
        if not np.isin(m, (-1, 0, 1)).all():
            raise ConfigurationError("network entries must be -1, 0, or +1")
        m = m.astype(np.int8, copy=True)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n(self):
        return self.matrix.shape[0]

    @classmethod
    def all_positive(cls, n):
        """Fully cooperative network: every entry +1 (diagonal included)."""
        return cls(np.ones((n, n), dtype=np.int8))

    @classmethod
    def all_negative(cls, n):
        """Fully anti-cooperative network: every entry -1 (diagonal included)."""
        return cls(-np.ones((n, n), dtype=np.int8))

    def coupling(self):
        """Float copy with the diagonal zeroed, ready for the coupling sum."""
        c = self.matrix.astype(np.float64)
        np.fill_diagonal(c, 0.0)
        return c

    def infinity_norm(self, include_diagonal=False):
        """max_i sum_j |a_ij|; by default over off-diagonal entries only."""
        m = np.abs(self.matrix.astype(np.int64))
        if not include_diagonal:
            m = m.copy()
            np.fill_diagonal(m, 0)
        return float(m.sum(axis=1).max())


def attention(params: AgentParams, z_i: float) -> float:
    """State-dependent attention u0 + gain * z^2."""
    return params.u0 + params.gain * z_i * z_i


def opinion_rhs(i, z, params, net: SocialNetwork, b_i: float) -> float:
    """Time derivative of agent i's opinion at state z with input b_i.

    Every other agent's opinion is taken at face value (complete
    information); the coupling sum skips j == i.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"agent index {i} out of range for {n} agents")
    p = params[i] if not isinstance(params, AgentParams) else params
    social = float(net.coupling()[i] @ z)
    u = attention(p, z[i])
    return -p.lam * z[i] + tanh(p.omega * u * z[i] + p.alpha * social - p.gamma * b_i)


def substep_count(dt_decision: float, dt: float) -> int:
    """Number of integrator substeps per decision interval.

    dt must divide dt_decision to (relative) 1e-9; anything else is a
    configuration error rather than a silently truncated step count.
    """
    if dt_decision <= 0 or dt <= 0:
        raise ConfigurationError(
            f"dt_decision and dt must be positive, got {dt_decision!r}, {dt!r}"
        )
    ratio = dt_decision / dt
    n_steps = round(ratio)
    if n_steps < 1 or abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
        raise ConfigurationError(
            f"dt ({dt!r}) must evenly divide dt_decision ({dt_decision!r}); "
            f"got ratio {ratio!r}"
        )
    return n_steps


def integrate_decision_interval(
    z_k, params, net: SocialNetwork, b, dt_decision: float, dt: float
) -> np.ndarray:
    """Integrate all opinions over one decision interval.

    b is the per-agent environmental input, held constant throughout the
    interval (it only changes at epoch boundaries). Uses the
    Dormand-Prince 5(4) tableau at fixed step dt, propagating the
    5th-order solution; deterministic for identical inputs. The result
    is NOT clamped -- callers that consume |z| as a probability should
    pass it through clamp_opinions().
    """
    z_k = np.asarray(z_k, dtype=np.float64)
    n = z_k.shape[0]
    if net.n != n:
        raise ConfigurationError(f"network is {net.n}x{net.n} but state has {n} agents")
    if np.abs(z_k).max(initial=0.0) > 1.0:
        raise ConfigurationError("initial opinions must lie in [-1, 1]")
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise ConfigurationError(f"b must have shape ({n},), got {b.shape}")
    n_steps = substep_count(dt_decision, dt)
    lam, omega, gamma, alpha, u0, gain = param_arrays(params, n)
    z_next = _kernels.integrate_interval(
        z_k, gamma * b, lam, omega, alpha, u0, gain, net.coupling(), dt, n_steps
    )
    if not np.isfinite(z_next).all():
        raise IntegrationError(
            "non-finite opinion produced during integration", opinions=z_next
        )
    return z_next


def clamp_opinions(z):
    """Clamp opinions to [-1, 1]; returns (clamped copy, #components clamped).

    The continuous flow preserves the box whenever lam_i >= 1, so any
    clamping there reflects integration error and is worth surfacing.
    """
    clamped = np.clip(z, -1.0, 1.0)
    return clamped, int(np.count_nonzero(clamped != z))


def largest_eigenvalue(net: SocialNetwork) -> float:
    """Largest eigenvalue of the network matrix as stored (diagonal included).

    For non-symmetric matrices this is the largest real part of the
    spectrum.
    """
    m = net.matrix.astype(np.float64)
    if np.array_equal(m, m.T):
        return float(np.linalg.eigvalsh(m).max())
    return float(np.linalg.eigvals(m).real.max())


def critical_attention(params: AgentParams, net: SocialNetwork) -> float:
    """Basal attention above which the neutral state destabilizes.

    (lam - alpha * largest_eigenvalue) / omega, for a homogeneous
    population.
    """
    if params.omega == 0:
        raise ConfigurationError("critical attention is undefined for omega = 0")
    return (params.lam - params.alpha * largest_eigenvalue(net)) / params.omega


def critical_gain(params: AgentParams) -> float:
    """Attention gain below which the opinion-forming pitchfork is supercritical."""
    if params.omega == 0:
        raise ConfigurationError("critical gain is undefined for omega = 0")
    return params.lam**3 / (3.0 * params.omega)
