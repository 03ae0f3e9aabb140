"""Opinion ODE: formula checks against independent references, integrator
properties (exact equilibrium, odd symmetry, convergence order, box
invariance, permutation equivariance), and spectral/threshold helpers."""

import math

import numpy as np
import pytest

from opinion_queues import (
    AgentParams,
    ConfigurationError,
    SocialNetwork,
    attention,
    critical_attention,
    critical_gain,
    integrate_decision_interval,
    largest_eigenvalue,
    opinion_rhs,
)
from opinion_queues.dynamics import clamp_opinions, substep_count
from opinion_queues.errors import IntegrationError

REF = AgentParams(lam=1.0, omega=1.0, gamma=0.5, alpha=0.2, u0=1.25, gain=0.25)


def rk4_reference(z0, params, net, b, duration, dt):
    """Independent classic RK4 integrator (different tableau, plain numpy)."""
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


class TestAttention:
    def test_zero_opinion(self):
        assert attention(AgentParams(u0=1.25, gain=0.25), 0.0) == 1.25

    def test_saturated_opinion(self):
        assert attention(AgentParams(u0=1.25, gain=0.25), 1.0) == 1.5

    def test_midrange(self):
        assert attention(AgentParams(u0=0.5, gain=0.1), 0.5) == pytest.approx(0.525)


class TestOpinionRhs:
    def test_neutral_state_is_equilibrium(self):
        net = SocialNetwork.all_negative(4)
        for i in range(4):
            assert opinion_rhs(i, np.zeros(4), REF, net, 0.0) == 0.0

    def test_pure_input_drive(self):
        # all opinions zero, input 2: derivative is tanh(-gamma*b) = tanh(-1)
        net = SocialNetwork.all_negative(10)
        value = opinion_rhs(0, np.zeros(10), REF, net, 2.0)
        assert value == pytest.approx(-0.7615941559557649, abs=1e-15)

    def test_odd_in_state_at_zero_input(self):
        net = SocialNetwork.all_positive(6)
        rng = np.random.default_rng(0)
        z = rng.uniform(-1, 1, 6)
        for i in range(6):
            forward = opinion_rhs(i, z, REF, net, 0.0)
            backward = opinion_rhs(i, -z, REF, net, 0.0)
            assert forward == pytest.approx(-backward, abs=1e-15)

    def test_index_out_of_range(self):
        net = SocialNetwork.all_positive(3)
        with pytest.raises(IndexError):
            opinion_rhs(3, np.zeros(3), REF, net, 0.0)

    def test_coupling_skips_self(self):
        # a network with only a self-loop must behave like no network at all
        loop = SocialNetwork(np.diag([1, 1, 1]))
        empty = SocialNetwork(np.zeros((3, 3), dtype=int))
        z = np.array([0.4, -0.2, 0.9])
        for i in range(3):
            assert opinion_rhs(i, z, REF, loop, 0.5) == opinion_rhs(i, z, REF, empty, 0.5)


class TestIntegrateInterval:
    def test_zero_equilibrium_exact(self):
        net = SocialNetwork.all_negative(10)
        z = integrate_decision_interval(np.zeros(10), REF, net, np.zeros(10), 0.1, 0.01)
        assert (z == 0.0).all()
        z = integrate_decision_interval(np.zeros(10), REF, net, np.zeros(10), 5.0, 0.01)
        assert (z == 0.0).all()

    def test_constant_drive_from_neutral(self):
        # symmetric setup: all agents identical, so components stay equal;
        # constant positive input pushes every opinion negative
        net = SocialNetwork.all_negative(10)
        b = np.full(10, 2.0)
        z = integrate_decision_interval(np.zeros(10), REF, net, b, 0.1, 0.01)
        assert (z < 0).all()
        assert (z == z[0]).all()
        ref = rk4_reference(np.zeros(10), REF, net, b, 0.1, 1e-5)
        assert np.abs(z - ref).max() < 1e-12

    def test_halving_step_barely_moves_result(self):
        net = SocialNetwork.all_negative(10)
        b = np.full(10, 2.0)
        coarse = integrate_decision_interval(np.zeros(10), REF, net, b, 0.1, 0.01)
        fine = integrate_decision_interval(np.zeros(10), REF, net, b, 0.1, 0.005)
        assert np.abs(coarse - fine).max() < 10 * 0.01**4

    def test_convergence_order(self):
        # max-norm error against an independent tiny-step reference must
        # shrink by at least 2^3.5 per step halving
        net = SocialNetwork.all_negative(10)
        rng = np.random.default_rng(5)
        z0 = rng.uniform(-0.5, 0.5, 10)
        b = np.full(10, 2.0)
        ref = rk4_reference(z0, REF, net, b, 2.0, 1e-4)
        errors = [
            np.abs(integrate_decision_interval(z0, REF, net, b, 2.0, dt) - ref).max()
            for dt in (0.5, 0.25, 0.125)
        ]
        for coarse, fine in zip(errors, errors[1:]):
            assert coarse / fine >= 2**3.5

    def test_odd_symmetry(self):
        net = SocialNetwork.all_negative(8)
        rng = np.random.default_rng(11)
        z0 = rng.uniform(-1, 1, 8)
        forward = integrate_decision_interval(z0, REF, net, np.zeros(8), 0.5, 0.01)
        backward = integrate_decision_interval(-z0, REF, net, np.zeros(8), 0.5, 0.01)
        assert np.abs(forward + backward).max() <= 1e-12

    def test_box_invariance_under_unit_damping(self):
        # lam >= 1 keeps the flow inside [-1, 1]; the discrete scheme may
        # overshoot by integration error only
        net = SocialNetwork.all_positive(10)
        rng = np.random.default_rng(3)
        for b_mag in (0.0, 2.0, 10.0):
            z0 = rng.choice([-1.0, 1.0], size=10)
            b = np.full(10, b_mag)
            z = integrate_decision_interval(z0, REF, net, b, 1.0, 0.01)
            assert np.abs(z).max() <= 1.0 + 10 * 0.01**4

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(9)
        n = 7
        params = [
            AgentParams(
                lam=rng.uniform(0.5, 2),
                omega=rng.uniform(0.5, 2),
                gamma=rng.uniform(-1, 1),
                alpha=rng.uniform(0, 0.5),
                u0=rng.uniform(0, 2),
                gain=rng.uniform(0, 0.5),
            )
            for _ in range(n)
        ]
        matrix = rng.integers(-1, 2, size=(n, n))
        net = SocialNetwork(matrix)
        z0 = rng.uniform(-1, 1, n)
        b = rng.uniform(-3, 3, n)
        out = integrate_decision_interval(z0, params, net, b, 0.3, 0.01)
        perm = rng.permutation(n)
        permuted_net = SocialNetwork(matrix[np.ix_(perm, perm)])
        permuted_out = integrate_decision_interval(
            z0[perm], [params[i] for i in perm], permuted_net, b[perm], 0.3, 0.01
        )
        assert np.array_equal(permuted_out, out[perm])

    def test_non_divisible_substep_rejected(self):
        net = SocialNetwork.all_negative(2)
        with pytest.raises(ConfigurationError):
            integrate_decision_interval(np.zeros(2), REF, net, np.zeros(2), 0.1, 0.03)

    def test_non_finite_blowup_reported(self):
        # absurd damping overflows within a step; must surface, not NaN out
        net = SocialNetwork.all_negative(2)
        params = AgentParams(lam=1e300)
        with pytest.raises(IntegrationError):
            integrate_decision_interval(
                np.array([1.0, -1.0]), params, net, np.zeros(2), 0.1, 0.01
            )

    def test_rejects_out_of_range_opinions(self):
        net = SocialNetwork.all_negative(2)
        with pytest.raises(ConfigurationError):
            integrate_decision_interval(np.array([1.5, 0.0]), REF, net, np.zeros(2), 0.1, 0.01)


class TestClampOpinions:
    def test_counts_only_changes(self):
        z = np.array([0.5, 1.0, 1.0 + 1e-9, -2.0])
        clamped, count = clamp_opinions(z)
        assert count == 2
        assert clamped.tolist() == [0.5, 1.0, 1.0, -1.0]


class TestSubstepCount:
    def test_exact_division(self):
        assert substep_count(0.1, 0.01) == 10
        assert substep_count(1.0, 0.05) == 20

    def test_rejects_non_integral_ratio(self):
        with pytest.raises(ConfigurationError):
            substep_count(0.1, 0.03)

    def test_rejects_nonpositive(self):
        with pytest.raises(ConfigurationError):
            substep_count(0.0, 0.01)
        with pytest.raises(ConfigurationError):
            substep_count(0.1, -0.01)


class TestLargestEigenvalue:
    def test_all_ones_rank_one(self):
        assert largest_eigenvalue(SocialNetwork.all_positive(10)) == pytest.approx(10.0, abs=1e-10)

    def test_negative_all_ones(self):
        assert largest_eigenvalue(SocialNetwork.all_negative(10)) == pytest.approx(0.0, abs=1e-10)

    def test_zero_matrix(self):
        assert largest_eigenvalue(SocialNetwork(np.zeros((5, 5), dtype=int))) == 0.0

    def test_non_symmetric_uses_real_part(self):
        rotation = SocialNetwork(np.array([[0, 1], [-1, 0]]))  # eigenvalues +/- i
        assert largest_eigenvalue(rotation) == pytest.approx(0.0, abs=1e-12)


class TestCriticalThresholds:
    def test_anticooperative_reference(self):
        net = SocialNetwork.all_negative(10)
        assert critical_attention(REF, net) == pytest.approx(1.0, abs=1e-12)

    def test_no_social_term(self):
        net = SocialNetwork(np.zeros((10, 10), dtype=int))
        params = AgentParams(lam=1.0, omega=1.0, alpha=0.0)
        assert critical_attention(params, net) == pytest.approx(1.0)

    def test_cooperative_reference(self):
        net = SocialNetwork.all_positive(10)
        assert critical_attention(REF, net) == pytest.approx(-1.0, abs=1e-12)

    def test_gain_reference_value(self):
        assert critical_gain(AgentParams(lam=1.0, omega=1.0)) == pytest.approx(1 / 3)
        assert critical_gain(AgentParams(lam=2.0, omega=1.0)) == pytest.approx(8 / 3)
        assert critical_gain(AgentParams(lam=0.0, omega=1.0)) == 0.0

    def test_omega_zero_is_undefined(self):
        with pytest.raises(ConfigurationError):
            critical_attention(AgentParams(omega=0.0), SocialNetwork.all_positive(3))
        with pytest.raises(ConfigurationError):
            critical_gain(AgentParams(omega=0.0))


class TestDomainTypes:
    def test_network_entry_validation(self):
        with pytest.raises(ConfigurationError):
            SocialNetwork(np.array([[0, 2], [0, 0]]))
        with pytest.raises(ConfigurationError):
            SocialNetwork(np.zeros((2, 3), dtype=int))

    def test_infinity_norm_excludes_diagonal_by_default(self):
        net = SocialNetwork.all_negative(10)
        assert net.infinity_norm() == 9.0
        assert net.infinity_norm(include_diagonal=True) == 10.0

    def test_coupling_has_zero_diagonal(self):
        net = SocialNetwork.all_positive(4)
        assert (np.diag(net.coupling()) == 0).all()

    def test_agent_params_validation(self):
        with pytest.raises(ConfigurationError):
            AgentParams(lam=-0.1)
        with pytest.raises(ConfigurationError):
            AgentParams(gain=-1.0)
        with pytest.raises(ConfigurationError):
            AgentParams(u0=float("nan"))
        # gamma may be negative (it only weighs the input)
        AgentParams(gamma=-0.5)
