import json

import numpy as np
import pytest

from pmd_accel import (
    Mdp,
    evaluate,
    functional_gradient,
    greedy_policy,
    greedy_row,
    pdl_gap,
    value_at_initial_dist,
    visitation,
)

from conftest import make_single_state_mdp, random_interior_policy, random_mdp


def truncated_power_series_v(mdp, pi, num_terms):
    """Independent oracle: V = sum_{i<N} (gamma P^pi)^i r^pi via doubling."""
    A = mdp.discount * mdp.policy_transition(pi)
    S = np.eye(mdp.num_states)
    power = A.copy()
    n = 1
    while n < num_terms:
        S = S + power @ S
        power = power @ power
        n *= 2
    return S @ mdp.policy_reward(pi)


class TestEvaluate:
    def test_geometric_series(self):
        mdp = make_single_state_mdp(reward=1.0, gamma=0.9)
        vals = evaluate(mdp, np.array([[1.0]]))
        assert vals.v == pytest.approx([10.0])
        np.testing.assert_allclose(vals.q, [[10.0]])

    def test_zero_reward(self, rng):
        mdp = random_mdp(rng, r_scale=0.0)
        pi = random_interior_policy(rng, 5, 3)
        vals = evaluate(mdp, pi)
        np.testing.assert_allclose(vals.v, 0.0)
        np.testing.assert_allclose(vals.q, 0.0)

    def test_power_iteration_oracle_example_i(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        vals = evaluate(mdp_i, pi)
        oracle = truncated_power_series_v(mdp_i, pi, 10**6)
        np.testing.assert_allclose(vals.v, oracle, atol=1e-8)

    def test_bellman_residual(self, rng):
        for _ in range(10):
            mdp = random_mdp(rng)
            pi = random_interior_policy(rng, 5, 3)
            vals = evaluate(mdp, pi)
            backup = mdp.reward + mdp.discount * np.einsum(
                "sap,p->sa", mdp.transition, vals.v
            )
            assert np.max(np.abs(vals.q - backup)) <= 1e-9
            v_from_q = np.einsum("sa,sa->s", pi, vals.q)
            assert np.max(np.abs(vals.v - v_from_q)) <= 1e-9

    def test_dimension_mismatch(self, mdp_i):
        with pytest.raises(ValueError):
            evaluate(mdp_i, np.full((3, 2), 1 / 2))


class TestVisitation:
    def test_single_state(self):
        mdp = make_single_state_mdp()
        np.testing.assert_allclose(visitation(mdp, np.array([[1.0]])), [1.0])

    def test_self_loops(self):
        P = np.zeros((2, 1, 2))
        P[0, 0, 0] = 1.0
        P[1, 0, 1] = 1.0
        mdp = Mdp(2, 1, P, np.zeros((2, 1)), 0.9, np.array([0.5, 0.5]))
        d = visitation(mdp, np.ones((2, 1)))
        np.testing.assert_allclose(d, [0.5, 0.5], atol=1e-12)

    def test_sums_to_one(self, rng):
        for _ in range(20):
            mdp = random_mdp(rng)
            d = visitation(mdp, random_interior_policy(rng, 5, 3))
            assert abs(d.sum() - 1.0) <= 1e-10
            assert np.all(d >= -1e-15)

    def test_gamma_to_zero_is_rho(self, rng):
        mdp = random_mdp(rng, gamma=1e-6)
        d = visitation(mdp, random_interior_policy(rng, 5, 3))
        np.testing.assert_allclose(d, mdp.initial_dist, atol=1e-5)

    def test_monte_carlo_oracle_example_i(self, mdp_i):
        # Sample S_i at i ~ Geometric(1 - gamma); its law is the discounted
        # visitation distribution.
        pi = np.full((2, 2), 0.5)
        d = visitation(mdp_i, pi)
        rng = np.random.default_rng(42)
        P_pi = mdp_i.policy_transition(pi)
        n = 10**5
        lengths = rng.geometric(1.0 - mdp_i.discount, size=n) - 1
        states = (rng.random(n) >= mdp_i.initial_dist[0]).astype(int)
        max_len = lengths.max()
        for step in range(1, max_len + 1):
            active = lengths >= step
            u = rng.random(active.sum())
            states[active] = (u >= P_pi[states[active], 0]).astype(int)
        freq = np.bincount(states, minlength=2) / n
        np.testing.assert_allclose(d, freq, atol=1e-2)


class TestGreedy:
    def test_unique_argmax(self):
        np.testing.assert_array_equal(greedy_row([1.0, 2.0, 0.5]), [0, 1, 0])

    def test_tie_split(self):
        np.testing.assert_allclose(greedy_row([3.0, 3.0]), [0.5, 0.5])

    def test_matches_linear_scan(self, rng):
        for _ in range(50):
            q = rng.normal(size=5)
            row = greedy_row(q)
            best = max(range(5), key=lambda a: q[a])
            assert row[best] == 1.0
            assert row.sum() == pytest.approx(1.0)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            greedy_row([1.0, float("nan")])
        with pytest.raises(ValueError):
            greedy_policy(np.array([[1.0, float("nan")]]))


class TestFunctionalGradient:
    def test_zero_reward(self, rng):
        mdp = random_mdp(rng, r_scale=0.0)
        g = functional_gradient(mdp, random_interior_policy(rng, 5, 3))
        np.testing.assert_allclose(g, 0.0)

    def test_bandit_row(self):
        mdp = make_single_state_mdp(gamma=0.0, num_actions=2)
        mdp = Mdp(1, 2, mdp.transition, np.array([[1.0, 0.0]]), 0.0, [1.0])
        g = functional_gradient(mdp, np.array([[0.5, 0.5]]))
        np.testing.assert_allclose(g, [[1.0, 0.0]])

    def test_directional_derivative_finite_differences(self, rng):
        step = 1e-5
        for _ in range(20):
            mdp = random_mdp(rng)
            pi = random_interior_policy(rng, 5, 3)
            pi_other = random_interior_policy(rng, 5, 3)
            direction = pi_other - pi
            grad = functional_gradient(mdp, pi)
            analytic = float(np.sum(grad * direction))

            def v_rho(p):
                return value_at_initial_dist(mdp, evaluate(mdp, p).v)

            fd = (v_rho(pi + step * direction) - v_rho(pi - step * direction)) / (
                2 * step
            )
            assert analytic == pytest.approx(fd, rel=1e-4, abs=1e-10)


class TestPdlGap:
    def test_identical_policies(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        assert pdl_gap(mdp_i, pi, pi) == pytest.approx(0.0, abs=1e-12)

    def test_matches_direct_difference(self, rng, mdp_i):
        for _ in range(100):
            pi_new = random_interior_policy(rng, 2, 2)
            pi_old = random_interior_policy(rng, 2, 2)
            direct = value_at_initial_dist(
                mdp_i, evaluate(mdp_i, pi_new).v
            ) - value_at_initial_dist(mdp_i, evaluate(mdp_i, pi_old).v)
            assert pdl_gap(mdp_i, pi_new, pi_old) == pytest.approx(
                direct, abs=1e-9
            )

    def test_random_mdps(self, rng):
        for _ in range(100):
            mdp = random_mdp(rng, num_states=4, num_actions=3)
            pi_new = random_interior_policy(rng, 4, 3)
            pi_old = random_interior_policy(rng, 4, 3)
            direct = value_at_initial_dist(
                mdp, evaluate(mdp, pi_new).v
            ) - value_at_initial_dist(mdp, evaluate(mdp, pi_old).v)
            assert pdl_gap(mdp, pi_new, pi_old) == pytest.approx(direct, abs=1e-9)

    def test_greedy_improvement_nonnegative(self, rng, mdp_i):
        pi_old = random_interior_policy(rng, 2, 2)
        pi_new = greedy_policy(evaluate(mdp_i, pi_old).q)
        assert pdl_gap(mdp_i, pi_new, pi_old) >= -1e-12


class TestMdpValidation:
    def test_bad_row_sum(self):
        P = np.ones((1, 1, 1)) * 0.5
        with pytest.raises(ValueError, match="sums to"):
            Mdp(1, 1, P, np.zeros((1, 1)), 0.9, [1.0])

    def test_negative_probability(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 0] = [1.5, 1.0]
        P[0, 0, 1] = -0.5
        with pytest.raises(ValueError, match="negative"):
            Mdp(2, 1, P, np.zeros((2, 1)), 0.9, [0.5, 0.5])

    def test_bad_discount(self):
        P = np.ones((1, 1, 1))
        with pytest.raises(ValueError, match="discount"):
            Mdp(1, 1, P, np.zeros((1, 1)), 1.0, [1.0])

    def test_bad_rho(self):
        P = np.ones((1, 1, 1))
        with pytest.raises(ValueError):
            Mdp(1, 1, P, np.zeros((1, 1)), 0.9, [0.5])

    def test_json_round_trip(self, mdp_i):
        restored = Mdp.from_json(mdp_i.to_json())
        np.testing.assert_array_equal(restored.transition, mdp_i.transition)
        np.testing.assert_array_equal(restored.reward, mdp_i.reward)
        assert restored.discount == mdp_i.discount
        parsed = json.loads(mdp_i.to_json())
        assert set(parsed) == {
            "num_states", "num_actions", "gamma", "rho", "transition", "reward",
        }

    def test_arrays_immutable(self, mdp_i):
        with pytest.raises(ValueError):
            mdp_i.reward[0, 0] = 99.0
