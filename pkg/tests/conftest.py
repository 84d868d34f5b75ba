import numpy as np
import pytest

from pmd_accel import Mdp, RandomMdpSpec, example_mdp, generate_random_mdp


def make_single_state_mdp(reward=1.0, gamma=0.9, num_actions=1):
    """One absorbing state; V = reward / (1 - gamma) under any policy."""
    P = np.ones((1, num_actions, 1))
    r = np.full((1, num_actions), reward)
    return Mdp(
        num_states=1, num_actions=num_actions, transition=P, reward=r,
        discount=gamma, initial_dist=np.array([1.0]),
    )


def random_mdp(rng, num_states=5, num_actions=3, gamma=0.9, r_scale=1.0):
    """Dense random MDP with Dirichlet transition rows."""
    P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    r = rng.uniform(0.0, r_scale, size=(num_states, num_actions))
    rho = rng.dirichlet(np.ones(num_states))
    return Mdp(
        num_states=num_states, num_actions=num_actions, transition=P,
        reward=r, discount=gamma, initial_dist=rho,
    )


def random_interior_policy(rng, num_states, num_actions, floor=0.05):
    pi = rng.dirichlet(np.ones(num_actions), size=num_states)
    pi = pi + floor
    return pi / pi.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def mdp_i():
    return example_mdp("i")


@pytest.fixture
def garnet_small():
    return generate_random_mdp(
        RandomMdpSpec(num_states=10, num_actions=5, branching=3, gamma=0.9,
                      r_max=1.0, seed=7)
    )
