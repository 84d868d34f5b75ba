import numpy as np
import pytest

from pmd_accel import (
    ExactCritic,
    MonteCarloCritic,
    NoisyCritic,
    evaluate,
    exact_q,
    monte_carlo_q,
    noisy_q,
)
from pmd_accel.critics import rollout_horizon

from conftest import make_single_state_mdp, random_interior_policy


def truncated_q(mdp, pi, horizon):
    """H-step dynamic-programming oracle for the truncated return."""
    v = np.zeros(mdp.num_states)
    q = None
    for _ in range(horizon):
        q = mdp.reward + mdp.discount * np.einsum("sap,p->sa", mdp.transition, v)
        v = np.einsum("sa,sa->s", pi, q)
    return q


class TestExactCritic:
    def test_geometric(self):
        mdp = make_single_state_mdp()
        np.testing.assert_allclose(exact_q(mdp, np.array([[1.0]])), [[10.0]])

    def test_delegates_to_evaluate(self, rng, garnet_small):
        pi = random_interior_policy(rng, 10, 5)
        np.testing.assert_array_equal(
            exact_q(garnet_small, pi), evaluate(garnet_small, pi).q
        )

    def test_power_iteration_oracle(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        q = exact_q(mdp_i, pi)
        v = np.zeros(2)
        for _ in range(2000):
            v = mdp_i.policy_reward(pi) + mdp_i.discount * (
                mdp_i.policy_transition(pi) @ v
            )
        oracle = mdp_i.reward + mdp_i.discount * np.einsum(
            "sap,p->sa", mdp_i.transition, v
        )
        np.testing.assert_allclose(q, oracle, atol=1e-8)


class TestNoisyCritic:
    def test_zero_noise_is_exact(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        np.testing.assert_array_equal(
            noisy_q(mdp_i, pi, 0.0, rng=0), exact_q(mdp_i, pi)
        )

    def test_seed_reproducibility(self, garnet_small, rng):
        pi = random_interior_policy(rng, 10, 5)
        a = noisy_q(garnet_small, pi, 0.5, rng=np.random.default_rng(11))
        b = noisy_q(garnet_small, pi, 0.5, rng=np.random.default_rng(11))
        np.testing.assert_array_equal(a, b)

    def test_empirical_std(self, garnet_small, rng):
        pi = random_interior_policy(rng, 10, 5)
        exact = exact_q(garnet_small, pi)
        gen = np.random.default_rng(3)
        residuals = np.concatenate(
            [
                (noisy_q(garnet_small, pi, 0.5, rng=gen) - exact).ravel()
                for _ in range(2000)
            ]
        )
        assert residuals.size == 10**5
        assert 0.45 <= residuals.std() <= 0.55

    def test_noise_independent_across_calls(self, garnet_small, rng):
        pi = random_interior_policy(rng, 10, 5)
        exact = exact_q(garnet_small, pi)
        gen = np.random.default_rng(5)
        draws = np.stack(
            [
                (noisy_q(garnet_small, pi, 1.0, rng=gen) - exact).ravel()
                for _ in range(401)
            ]
        )
        pairs_a = draws[:-1].ravel()
        pairs_b = draws[1:].ravel()
        assert pairs_a.size >= 10**4
        r = np.corrcoef(pairs_a, pairs_b)[0, 1]
        assert abs(r) < 0.05

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError):
            NoisyCritic(tau=-0.1)


class TestMonteCarloCritic:
    def test_deterministic_single_state(self):
        mdp = make_single_state_mdp(reward=1.0, gamma=0.9)
        expected = sum(0.9**i for i in range(10))
        for m in (1, 3):
            q = monte_carlo_q(mdp, np.array([[1.0]]), m, rng=0)
            assert q[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_horizon_is_effective_horizon(self):
        assert rollout_horizon(0.9) == 10
        assert rollout_horizon(0.95) == 20
        assert rollout_horizon(0.0) == 1

    def test_large_m_matches_truncated_q(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        q = monte_carlo_q(mdp_i, pi, 10**4, rng=np.random.default_rng(17))
        oracle = truncated_q(mdp_i, pi, rollout_horizon(mdp_i.discount))
        assert np.max(np.abs(q - oracle)) < 0.05

    def test_seed_reproducibility(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        a = monte_carlo_q(mdp_i, pi, 50, rng=np.random.default_rng(9))
        b = monte_carlo_q(mdp_i, pi, 50, rng=np.random.default_rng(9))
        np.testing.assert_array_equal(a, b)

    def test_consistency_in_m(self, mdp_i):
        pi = np.full((2, 2), 0.5)
        oracle = truncated_q(mdp_i, pi, rollout_horizon(mdp_i.discount))
        med_errors = []
        for m in (10, 100, 1000):
            errs = [
                np.max(
                    np.abs(
                        monte_carlo_q(mdp_i, pi, m, rng=np.random.default_rng(s))
                        - oracle
                    )
                )
                for s in range(9)
            ]
            med_errors.append(np.median(errs))
        assert med_errors[0] > med_errors[1] > med_errors[2]

    def test_bad_m_rejected(self):
        with pytest.raises(ValueError):
            MonteCarloCritic(m=0)

    def test_missing_rng_rejected(self, mdp_i):
        with pytest.raises(ValueError):
            MonteCarloCritic(m=5).estimate(mdp_i, np.full((2, 2), 0.5))


def test_exact_critic_is_stateless(garnet_small, rng):
    pi = random_interior_policy(rng, 10, 5)
    critic = ExactCritic()
    np.testing.assert_array_equal(
        critic.estimate(garnet_small, pi), critic.estimate(garnet_small, pi)
    )
