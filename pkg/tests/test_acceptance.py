"""End-to-end acceptance suite.

Each test prints one [PASS]/[FAIL] line per criterion (run with -s to
watch them live). The two table reproductions run the full
10,000-trial protocol per (network, rho) cell and dominate the runtime;
everything is seeded, so results are bit-stable across runs and worker
counts.
"""

import math
import time

import numpy as np
import pytest

from opinion_queues import AgentParams, SimConfig, SocialNetwork
from opinion_queues.bounds import (
    band_entry_floor,
    empirical_drift_bounds,
    hitting_time_bound,
    opinion_floors,
    validate_opinion_floor,
    SPLIT_STREAM_INDEX,
    _imbalanced_splits,
)
from opinion_queues.dynamics import integrate_decision_interval
from opinion_queues.game import band_oracle_mismatches, hitting_time
from opinion_queues.harness import emit_outputs, resolve_workers, run_cell, run_sweep
from opinion_queues.queueing import QUEUE_A, QUEUE_B, run_trial, trial_rng

MASTER_SEED = 1234  # package default; every criterion below is seeded by it
RHOS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
WORKERS = resolve_workers(None)

STRONG_DRIVE = dict(
    n=10, dt_decision=1.0,
    lam=1.0, omega=0.5, gamma=3.0, alpha=0.0, u0=0.5, gain=0.1,
    network="all_negative", rho=0.0, trials=1, master_seed=MASTER_SEED,
)


def criterion(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def table_stats(network):
    config = SimConfig(trials=10_000, master_seed=MASTER_SEED)
    start = time.time()
    results = run_sweep(
        config, networks=(network,), rhos=RHOS, workers=WORKERS, keep_samples=False
    )
    elapsed = time.time() - start
    return {r.rho: r.stats for r in results}, elapsed


@pytest.fixture(scope="module")
def anti_table():
    return table_stats("all_negative")


@pytest.fixture(scope="module")
def coop_table():
    return table_stats("all_positive")


def test_nash_band_oracle_equivalence():
    start = time.time()
    mismatches = band_oracle_mismatches(8)
    elapsed = time.time() - start
    total = sum(2**n for n in range(2, 9))
    ok = criterion(
        "nash band <-> deviation oracle (N=2..8, exhaustive)",
        mismatches == [] and elapsed < 1.0,
        f"{total} profiles, {len(mismatches)} mismatches, {elapsed:.2f}s",
    )
    assert ok


def test_opinion_floor_empirical():
    config = SimConfig(t_horizon=20.0, dt=0.01, **STRONG_DRIVE)
    start = time.time()
    result = validate_opinion_floor(config, trials=100, master_seed=MASTER_SEED)
    elapsed = time.time() - start
    ok = criterion(
        "empirical opinion floor (margin 5.7, interval 1.0, 100 trials)",
        result.status == "ok" and result.violations == 0 and elapsed < 30.0,
        f"floor={result.opinion_floor:.5f}, {result.epochs_checked} epochs / "
        f"{result.agents_checked} agent checks, {result.violations} violations, "
        f"{elapsed:.1f}s",
    )
    assert ok


def test_table_anticooperative(anti_table):
    stats, elapsed = anti_table
    checks = []
    for rho in (0.0, 0.2, 0.4):
        checks.append(criterion(
            f"anti-cooperative r at rho={rho:g} (>= 0.99)",
            stats[rho].hit_fraction >= 0.99,
            f"r={stats[rho].hit_fraction:.4f}",
        ))
    s0 = stats[0.0]
    checks.append(criterion(
        "anti-cooperative hitting time at rho=0 (in [2.5, 3.6])",
        2.5 <= s0.tau_mean <= 3.6,
        f"tau_mean={s0.tau_mean:.3f} (sd {s0.tau_std:.3f})",
    ))
    checks.append(criterion(
        "anti-cooperative persistence at rho=0 (>= 14)",
        s0.persistence_mean >= 14.0,
        f"persistence_mean={s0.persistence_mean:.2f}",
    ))
    checks.append(criterion(
        "anti-cooperative switches at rho=0 (in [3, 6])",
        3.0 <= s0.switches_mean <= 6.0,
        f"switches_mean={s0.switches_mean:.3f}",
    ))
    for rho in (0.8, 1.0):
        checks.append(criterion(
            f"anti-cooperative r at rho={rho:g} (>= 0.6)",
            stats[rho].hit_fraction >= 0.6,
            f"r={stats[rho].hit_fraction:.4f}",
        ))
    print(f"  (anti-cooperative table: 6 cells x 10,000 trials in {elapsed:.0f}s)")
    assert all(checks)


def test_table_cooperative(coop_table):
    stats, elapsed = coop_table
    checks = []
    for rho in (0.0, 0.2, 0.4):
        checks.append(criterion(
            f"cooperative r at rho={rho:g} (>= 0.99)",
            stats[rho].hit_fraction >= 0.99,
            f"r={stats[rho].hit_fraction:.4f}",
        ))
    switches = [stats[rho].switches_mean for rho in (0.0, 0.2, 0.4)]
    checks.append(criterion(
        "cooperative switches at rho=0 (>= 15) and decreasing over rho in {0, .2, .4}",
        switches[0] >= 15.0 and switches[0] > switches[1] > switches[2],
        "switches_mean=" + " > ".join(f"{s:.2f}" for s in switches),
    ))
    persistence = {
        rho: 0.0 if math.isnan(stats[rho].persistence_mean) else stats[rho].persistence_mean
        for rho in RHOS
    }
    checks.append(criterion(
        "cooperative persistence (<= 0.5 for every rho)",
        all(v <= 0.5 for v in persistence.values()),
        "persistence_mean=" + ", ".join(f"{r:g}:{v:.3f}" for r, v in persistence.items()),
    ))
    checks.append(criterion(
        "cooperative r at rho=0.8 (<= 0.3)",
        stats[0.8].hit_fraction <= 0.3,
        f"r={stats[0.8].hit_fraction:.4f}",
    ))
    checks.append(criterion(
        "cooperative r at rho=1 (<= 0.05)",
        stats[1.0].hit_fraction <= 0.05,
        f"r={stats[1.0].hit_fraction:.4f}",
    ))
    print(f"  (cooperative table: 6 cells x 10,000 trials in {elapsed:.0f}s)")
    assert all(checks)


def test_herding_event():
    # at least one of 200 cooperative rho=0.6 trials shows an epoch with
    # every active agent in a single queue after leaving the pool
    config = SimConfig(network="all_positive", rho=0.6, trials=1, master_seed=MASTER_SEED)
    herding = 0
    for index in range(200):
        trace = run_trial(config, MASTER_SEED, index)
        if ((trace.n_a == 10) | (trace.n_b == 10)).any():
            herding += 1
    ok = criterion(
        "cooperative herding at rho=0.6 (>= 1 of 200 trials all in one queue)",
        herding >= 1,
        f"{herding}/200 trials herded",
    )
    assert ok


def rk4_reference(z0, net, b, duration, dt, params):
    coupling = net.coupling()
    lam, omega, gamma, alpha, u0, gain = (
        np.full(len(z0), getattr(params, f))
        for f in ("lam", "omega", "gamma", "alpha", "u0", "gain")
    )

    def f(z):
        u = u0 + gain * z * z
        return -lam * z + np.tanh(omega * u * z + alpha * (coupling @ z) - gamma * b)

    z = np.asarray(z0, dtype=float).copy()
    for _ in range(round(duration / dt)):
        k1 = f(z)
        k2 = f(z + 0.5 * dt * k1)
        k3 = f(z + 0.5 * dt * k2)
        k4 = f(z + dt * k3)
        z = z + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return z


def test_integrator_properties():
    params = AgentParams()
    net = SocialNetwork.all_negative(10)
    checks = []

    z = integrate_decision_interval(np.zeros(10), params, net, np.zeros(10), 5.0, 0.01)
    checks.append(criterion(
        "integrator zero-equilibrium exactness", (z == 0.0).all(), "z stays exactly 0"
    ))

    rng = np.random.default_rng(11)
    z0 = rng.uniform(-1, 1, 10)
    forward = integrate_decision_interval(z0, params, net, np.zeros(10), 0.5, 0.01)
    backward = integrate_decision_interval(-z0, params, net, np.zeros(10), 0.5, 0.01)
    odd_err = np.abs(forward + backward).max()
    checks.append(criterion(
        "integrator odd symmetry (<= 1e-12)", odd_err <= 1e-12, f"error={odd_err:.2e}"
    ))

    z0 = np.random.default_rng(5).uniform(-0.5, 0.5, 10)
    b = np.full(10, 2.0)
    ref = rk4_reference(z0, net, b, 2.0, 1e-4, params)
    errors = [
        np.abs(integrate_decision_interval(z0, params, net, b, 2.0, dt) - ref).max()
        for dt in (0.5, 0.25, 0.125)
    ]
    ratios = [a / c for a, c in zip(errors, errors[1:])]
    checks.append(criterion(
        "integrator convergence order (ratio >= 2^3.5 per halving)",
        all(r >= 2**3.5 for r in ratios),
        "ratios=" + ", ".join(f"{r:.1f}" for r in ratios),
    ))

    overshoot = 0.0
    for b_mag in (0.0, 2.0, 10.0):
        z0 = np.random.default_rng(3).choice([-1.0, 1.0], size=10)
        z = integrate_decision_interval(z0, params, net, np.full(10, b_mag), 1.0, 0.01)
        overshoot = max(overshoot, float(np.abs(z).max()) - 1.0)
    checks.append(criterion(
        "integrator box invariance at lam=1 (overshoot <= 10*dt^4)",
        overshoot <= 10 * 0.01**4,
        f"max overshoot={overshoot:.2e}",
    ))
    assert all(checks)


def test_hitting_bound_consistency():
    # 1000 trials from imbalanced all-queued starts (the regime where the
    # drift conditions hold); one-sided 99% check of the epoch bound
    config = SimConfig(t_horizon=300.0, dt=0.05, **STRONG_DRIVE)
    margin = 5.7
    floor = float(opinion_floors(config.agent_params, margin, config.dt_decision).min())
    split_rng = trial_rng(MASTER_SEED, SPLIT_STREAM_INDEX)
    splits = _imbalanced_splits(split_rng, config.n, 1000)
    taus = np.empty(1000)
    caps = np.empty(1000)
    floors_seen = np.empty(1000)
    for index in range(1000):
        start = np.full(config.n, QUEUE_B, dtype=np.int8)
        order = split_rng.permutation(config.n)
        start[order[: int(splits[index])]] = QUEUE_A
        trace = run_trial(config, MASTER_SEED, index, initial_locations=start)
        tau = hitting_time(trace)
        taus[index] = math.nan if tau is None else tau / config.dt_decision
        drift = empirical_drift_bounds(trace)
        caps[index] = drift.expensive_cap
        floors_seen[index] = drift.join_floor
    assert not np.isnan(taus).any(), "every trial must hit within the horizon"
    psi_emp = float(np.nanmax(caps))
    # the pool is empty from the start here, so no join floor is ever
    # observed; zeta = 1 is the most conservative (smallest) bound choice
    zeta_emp = float(np.nanmin(floors_seen)) if not np.isnan(floors_seen).all() else 1.0
    entry = band_entry_floor(config.n, floor, psi_emp)
    bound = hitting_time_bound(config.n, zeta_emp, entry)
    mean = float(taus.mean())
    stderr = float(taus.std(ddof=1) / math.sqrt(taus.size))
    ok = criterion(
        "hitting-time bound consistency (1000 trials, one-sided 99%)",
        mean <= bound + 2.326 * stderr,
        f"mean={mean:.1f} epochs (se {stderr:.2f}) <= bound={bound:.3g} "
        f"[psi_emp={psi_emp:.3f}, floor={floor:.4f}]",
    )
    assert ok


def test_sweep_determinism_across_workers(tmp_path):
    config = SimConfig(t_horizon=10.0, trials=200, master_seed=MASTER_SEED)
    blobs = {}
    for workers in (1, 4, 8):
        results = run_sweep(
            config,
            networks=("all_negative", "all_positive"),
            rhos=(0.0, 0.6),
            workers=workers,
        )
        paths = emit_outputs(results, tmp_path / f"w{workers}")
        blobs[workers] = open(paths["summary_csv"], "rb").read()
    ok = criterion(
        "sweep determinism (byte-identical summary.csv for 1/4/8 workers)",
        blobs[1] == blobs[4] == blobs[8],
        f"{len(blobs[1])} bytes each",
    )
    assert ok
