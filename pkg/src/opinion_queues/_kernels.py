"""Numba kernels for the opinion ODE and the per-trial epoch loop.

Everything here is deliberately scalar-loop code: at N ~ 10 agents the
numpy dispatch overhead dwarfs the arithmetic, and explicit loops let a
whole 300-epoch trial run in a few milliseconds. All kernels release the
GIL so trials can run on a thread pool.
"""

import math

import numpy as np
from numba import njit

# Dormand-Prince 5(4) coefficients, 5th-order propagation only (the
# embedded 4th-order error estimate is unused at fixed step, so the
# seventh stage is never evaluated).
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)

# Location codes shared with the pure-python layer.
LOC_WAITING = 0
LOC_QUEUE_A = 1
LOC_QUEUE_B = -1
LOC_DEPARTED = 9


@njit(cache=True, nogil=True)
def opinion_rhs_into(z, drive, lam, omega, alpha, u0, gain, coupling, out):
    """dz/dt for every agent; coupling must have a zeroed diagonal."""
    n = z.shape[0]
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += coupling[i, j] * z[j]
        u = u0[i] + gain[i] * z[i] * z[i]
        x = omega[i] * u * z[i] + alpha[i] * s - drive[i]
        out[i] = -lam[i] * z[i] + math.tanh(x)


@njit(cache=True, nogil=True)
def integrate_interval(z, drive, lam, omega, alpha, u0, gain, coupling, h, n_steps):
    """Advance opinions over one decision interval at fixed step h.

    The system is autonomous once the environmental drive is frozen, so
    stage times never appear. Returns a fresh array; no clamping here.
    """
    n = z.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    yt = np.empty(n)
    y = z.copy()
    for _ in range(n_steps):
        opinion_rhs_into(y, drive, lam, omega, alpha, u0, gain, coupling, k1)
        for i in range(n):
            yt[i] = y[i] + h * (_A21 * k1[i])
        opinion_rhs_into(yt, drive, lam, omega, alpha, u0, gain, coupling, k2)
        for i in range(n):
            yt[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        opinion_rhs_into(yt, drive, lam, omega, alpha, u0, gain, coupling, k3)
        for i in range(n):
            yt[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        opinion_rhs_into(yt, drive, lam, omega, alpha, u0, gain, coupling, k4)
        for i in range(n):
            yt[i] = y[i] + h * (
                _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
            )
        opinion_rhs_into(yt, drive, lam, omega, alpha, u0, gain, coupling, k5)
        for i in range(n):
            yt[i] = y[i] + h * (
                _A61 * k1[i]
                + _A62 * k2[i]
                + _A63 * k3[i]
                + _A64 * k4[i]
                + _A65 * k5[i]
            )
        opinion_rhs_into(yt, drive, lam, omega, alpha, u0, gain, coupling, k6)
        for i in range(n):
            y[i] = y[i] + h * (
                _B1 * k1[i]
                + _B3 * k3[i]
                + _B4 * k4[i]
                + _B5 * k5[i]
                + _B6 * k6[i]
            )
    return y


@njit(cache=True, nogil=True)
def run_epochs_no_service(
    z0,
    informed,
    gamma,
    uniforms,
    lam,
    omega,
    alpha,
    u0,
    gain,
    coupling,
    h,
    n_steps,
    n_epochs,
    loc0,
):
    """Full epoch loop for the zero-service-rate case.

    Per epoch: freeze the signed queue imbalance as environmental input
    (zero for uninformed agents), integrate opinions, clamp to [-1, 1],
    then apply all join/switch draws simultaneously against the
    pre-epoch locations. uniforms[k, i] is agent i's draw at epoch k;
    departed agents never occur here so the pre-drawn block matches the
    "one uniform per non-departed agent, ascending index" contract.

    Returns (opinions history, location history, clamp count,
    first bad epoch or 0 if every opinion stayed finite).
    """
    n = z0.shape[0]
    zs = np.empty((n_epochs + 1, n))
    locs = np.empty((n_epochs + 1, n), np.int8)
    drive = np.empty(n)
    loc = loc0.copy()
    z = z0.copy()
    zs[0] = z0
    locs[0] = loc0
    clamped = 0
    for k in range(n_epochs):
        n_a = 0
        n_b = 0
        for i in range(n):
            if loc[i] == LOC_QUEUE_A:
                n_a += 1
            elif loc[i] == LOC_QUEUE_B:
                n_b += 1
        imbalance = float(n_a - n_b)
        for i in range(n):
            drive[i] = gamma[i] * imbalance if informed[i] else 0.0
        z = integrate_interval(
            z, drive, lam, omega, alpha, u0, gain, coupling, h, n_steps
        )
        for i in range(n):
            if not np.isfinite(z[i]):
                return zs, locs, clamped, k + 1
            if z[i] > 1.0:
                z[i] = 1.0
                clamped += 1
            elif z[i] < -1.0:
                z[i] = -1.0
                clamped += 1
        for i in range(n):
            zi = z[i]
            if zi == 0.0:
                continue
            target = LOC_QUEUE_A if zi > 0.0 else LOC_QUEUE_B
            li = loc[i]
            if li == LOC_WAITING:
                if uniforms[k, i] <= abs(zi):
                    loc[i] = target
            elif li != target and li != LOC_DEPARTED:
                if uniforms[k, i] <= abs(zi):
                    loc[i] = target
        zs[k + 1] = z
        locs[k + 1] = loc
    return zs, locs, clamped, 0
