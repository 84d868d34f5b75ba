"""Action-value providers: exact model-based, Gaussian-perturbed, Monte-Carlo.

A critic is a pure function of (mdp, policy, rng, t); all sampling flows
through the generator handed in by the caller.
"""

import math

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .mdp import check_policy, evaluate


class Critic(ABC):
    @abstractmethod
    def estimate(self, mdp, pi, rng=None, t=0):
        """Return an estimate of Q^pi as an (S, A) matrix."""


@dataclass(frozen=True)
class ExactCritic(Critic):
    """Model-based critic: returns Q^pi from exact policy evaluation."""

    def estimate(self, mdp, pi, rng=None, t=0):
        return evaluate(mdp, pi).q


@dataclass(frozen=True)
class NoisyCritic(Critic):
    """Exact critic plus i.i.d. Gaussian noise of scale tau per (s, a) entry."""

    tau: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("noise scale tau must be nonnegative")

    def estimate(self, mdp, pi, rng=None, t=0):
        q = evaluate(mdp, pi).q
        if self.tau == 0:
            return q
        rng = _require_rng(rng)
        return q + rng.normal(0.0, self.tau, size=q.shape)


def rollout_horizon(gamma):
    # the small slack absorbs float error in 1/(1-gamma), e.g. 10.000000000000002
    return max(1, math.ceil(1.0 / (1.0 - gamma) - 1e-9))


@dataclass(frozen=True)
class MonteCarloCritic(Critic):
    """Empirical-return critic.

    For each (s, a) it simulates m trajectories that start in s, take a first,
    then follow the policy for ceil(1/(1-gamma)) steps, and averages the
    discounted truncated returns.
    """

    m: int
    horizon: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("trajectory count m must be at least 1")

    def estimate(self, mdp, pi, rng=None, t=0):
        pi = check_policy(mdp, pi)
        rng = _require_rng(rng)
        H = self.horizon if self.horizon is not None else rollout_horizon(mdp.discount)
        S, A = mdp.num_states, mdp.num_actions
        cdf_sa = np.cumsum(mdp.transition, axis=2)
        cdf_pi = np.cumsum(pi, axis=1)
        discounts = mdp.discount ** np.arange(H)
        q_hat = np.empty((S, A))
        for s in range(S):
            for a in range(A):
                returns = np.zeros(self.m)
                states = np.full(self.m, s)
                actions = np.full(self.m, a)
                for step in range(H):
                    returns += discounts[step] * mdp.reward[states, actions]
                    u = rng.random(self.m)
                    states = (u[:, None] > cdf_sa[states, actions]).sum(axis=1)
                    u = rng.random(self.m)
                    actions = (u[:, None] > cdf_pi[states]).sum(axis=1)
                q_hat[s, a] = returns.mean()
        return q_hat


def _require_rng(rng):
    if rng is None:
        raise ValueError("this critic needs an explicit rng")
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def exact_q(mdp, pi):
    """Convenience wrapper around the exact critic."""
    return ExactCritic().estimate(mdp, pi)


def noisy_q(mdp, pi, tau, rng):
    return NoisyCritic(tau).estimate(mdp, pi, rng=rng)


def monte_carlo_q(mdp, pi, m, rng, horizon=None):
    return MonteCarloCritic(m, horizon=horizon).estimate(mdp, pi, rng=rng)


def resolve_critic(critic):
    if critic is None:
        return ExactCritic()
    if isinstance(critic, Critic):
        return critic
    raise ValueError(f"expected a Critic instance or None, got {critic!r}")
