"""Finite discounted MDPs, exact policy evaluation and policy-gradient machinery.

Everything here is a pure function of its inputs; `Mdp` and the arrays it
holds are treated as immutable after construction.
"""

from dataclasses import dataclass

import json

import numpy as np

from .validation import (
    as_float_array,
    check_distribution,
    check_policy_matrix,
    check_transition_tensor,
)

GREEDY_TIE_ATOL = 1e-12


@dataclass(frozen=True)
class Mdp:
    """Finite discounted MDP with dense transition tensor P[s, a, s']."""

    num_states: int
    num_actions: int
    transition: np.ndarray
    reward: np.ndarray
    discount: float
    initial_dist: np.ndarray

    def __post_init__(self):
        if self.num_states < 1 or self.num_actions < 1:
            raise ValueError("num_states and num_actions must be positive")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        P = check_transition_tensor(self.transition, self.num_states, self.num_actions)
        r = as_float_array(self.reward, "reward", ndim=2)
        if r.shape != (self.num_states, self.num_actions):
            raise ValueError(
                f"reward shape {r.shape} does not match "
                f"({self.num_states}, {self.num_actions})"
            )
        rho = check_distribution(self.initial_dist, "initial_dist")
        for name, arr in (("transition", P), ("reward", r), ("initial_dist", rho)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def policy_transition(self, pi):
        """State-to-state transition matrix P^pi[s, s'] under a policy."""
        return np.einsum("sa,sap->sp", pi, self.transition)

    def policy_reward(self, pi):
        """Expected one-step reward r^pi[s] under a policy."""
        return np.einsum("sa,sa->s", pi, self.reward)

    def to_json(self):
        return json.dumps(
            {
                "num_states": self.num_states,
                "num_actions": self.num_actions,
                "gamma": self.discount,
                "rho": self.initial_dist.tolist(),
                "transition": self.transition.tolist(),
                "reward": self.reward.tolist(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(
            num_states=int(obj["num_states"]),
            num_actions=int(obj["num_actions"]),
            transition=np.asarray(obj["transition"], dtype=float),
            reward=np.asarray(obj["reward"], dtype=float),
            discount=float(obj["gamma"]),
            initial_dist=np.asarray(obj["rho"], dtype=float),
        )


@dataclass(frozen=True)
class ValueFunctions:
    """Value vector V[s] and action values Q[s, a] of one policy."""

    v: np.ndarray
    q: np.ndarray


def check_policy(mdp, pi):
    return check_policy_matrix(pi, mdp.num_states, mdp.num_actions)


def evaluate(mdp, pi):
    """Solve (I - gamma P^pi) V = r^pi exactly; Q by a one-step backup of V."""
    pi = check_policy(mdp, pi)
    P_pi = mdp.policy_transition(pi)
    r_pi = mdp.policy_reward(pi)
    A = np.eye(mdp.num_states) - mdp.discount * P_pi
    try:
        v = np.linalg.solve(A, r_pi)
    except np.linalg.LinAlgError as exc:  # unreachable for gamma < 1
        raise ArithmeticError(
            f"policy evaluation system is singular (gamma={mdp.discount})"
        ) from exc
    q = mdp.reward + mdp.discount * np.einsum("sap,p->sa", mdp.transition, v)
    return ValueFunctions(v=v, q=q)


def visitation(mdp, pi):
    """Discounted state-visitation distribution (1-gamma) rho^T (I - gamma P^pi)^-1."""
    pi = check_policy(mdp, pi)
    A = np.eye(mdp.num_states) - mdp.discount * mdp.policy_transition(pi)
    d = (1.0 - mdp.discount) * np.linalg.solve(A.T, mdp.initial_dist)
    return d


def greedy_row(q_row, tie_atol=GREEDY_TIE_ATOL):
    """Probability row with all mass on the argmax; ties split uniformly."""
    q_row = np.asarray(q_row, dtype=float)
    if np.any(np.isnan(q_row)):
        raise ValueError("greedy received NaN action values")
    mask = q_row >= q_row.max() - tie_atol
    return mask / mask.sum()


def greedy_policy(q, tie_atol=GREEDY_TIE_ATOL):
    """Row-wise greedy policy for a Q matrix."""
    q = np.asarray(q, dtype=float)
    if np.any(np.isnan(q)):
        raise ValueError("greedy received NaN action values")
    mask = q >= q.max(axis=1, keepdims=True) - tie_atol
    return mask / mask.sum(axis=1, keepdims=True)


def functional_gradient(mdp, pi):
    """Gradient of V_rho with respect to the policy probabilities.

    Row s is d^pi_rho[s] * Q^pi[s, :] / (1 - gamma), so the directional
    derivative toward another policy is <grad, pi' - pi>.
    """
    vals = evaluate(mdp, pi)
    d = visitation(mdp, pi)
    return d[:, None] * vals.q / (1.0 - mdp.discount)


def pdl_gap(mdp, pi_new, pi_old):
    """Performance difference computed from the advantage decomposition.

    Returns 1/(1-gamma) E_{s ~ d^new}[<Q^old_s, pi_new_s - pi_old_s>], which
    equals V_rho^new - V_rho^old; kept as a separate operation so the identity
    stays checkable against direct evaluation.
    """
    pi_new = check_policy(mdp, pi_new)
    pi_old = check_policy(mdp, pi_old)
    q_old = evaluate(mdp, pi_old).q
    d_new = visitation(mdp, pi_new)
    per_state = np.einsum("sa,sa->s", q_old, pi_new - pi_old)
    return float(d_new @ per_state / (1.0 - mdp.discount))


def value_at_initial_dist(mdp, v):
    return float(mdp.initial_dist @ v)
