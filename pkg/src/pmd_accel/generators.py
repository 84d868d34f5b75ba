"""Random-MDP generation, the hard-coded two-state example MDPs, and policy
initializers."""

import itertools
import logging

from dataclasses import dataclass

import numpy as np

from .mdp import Mdp, evaluate, value_at_initial_dist
from .mirror import softmax
from .validation import check_rng

logger = logging.getLogger(__name__)

BOUNDARY_DELTA = 1e-3

INIT_CENTER = "center"
INIT_BOUNDARY = "boundary"
INIT_RANDOM_UNIFORM = "random_uniform"
INIT_MODES = (INIT_CENTER, INIT_BOUNDARY, INIT_RANDOM_UNIFORM)


@dataclass(frozen=True)
class RandomMdpSpec:
    """Parameters of the random-MDP generator: sizes, branching factor b
    (how many next states each state-action pair can reach), discount and
    reward ceiling."""

    num_states: int = 100
    num_actions: int = 10
    branching: int = 5
    gamma: float = 0.95
    r_max: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.branching <= self.num_states:
            raise ValueError(
                f"branching must lie in [1, {self.num_states}], got {self.branching}"
            )
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")


def generate_random_mdp(spec, rng=None):
    """Sample an MDP: each (s, a) reaches ``branching`` uniformly chosen next
    states with sorted-uniform-cut-point probabilities; rewards are sampled
    per state and broadcast across actions."""
    rng = check_rng(spec.seed if rng is None else rng)
    S, A, b = spec.num_states, spec.num_actions, spec.branching
    P = np.zeros((S, A, S))
    for s in range(S):
        for a in range(A):
            succ = rng.choice(S, size=b, replace=False)
            if b == 1:
                P[s, a, succ[0]] = 1.0
            else:
                cuts = np.sort(rng.uniform(0.0, 1.0, size=b - 1))
                P[s, a, succ] = np.diff(np.concatenate(([0.0], cuts, [1.0])))
    r_state = rng.uniform(0.0, spec.r_max, size=S)
    reward = np.repeat(r_state[:, None], A, axis=1)
    rho = np.full(S, 1.0 / S)
    return Mdp(
        num_states=S,
        num_actions=A,
        transition=P,
        reward=reward,
        discount=spec.gamma,
        initial_dist=rho,
    )


# Two-state examples, flattened with row i*|A|+j holding P(. | s_i, a_j).
# The first transition row of example "i" is shipped with a negative entry;
# repair_rows clamps and renormalizes it (logged below).
_EXAMPLES = {
    "i": {
        "num_actions": 2,
        "gamma": 0.9,
        "r": [-0.45, -0.1, 0.5, 0.5],
        "P": [[-0.45, 0.3], [0.99, 0.01], [0.2, 0.8], [0.99, 0.01]],
    },
    "ii": {
        "num_actions": 2,
        "gamma": 0.9,
        "r": [0.06, 0.38, -0.13, 0.64],
        "P": [[0.01, 0.99], [0.92, 0.08], [0.08, 0.92], [0.70, 0.30]],
    },
    "iii": {
        "num_actions": 2,
        "gamma": 0.9,
        "r": [0.88, -0.02, -0.98, 0.42],
        "P": [[0.96, 0.04], [0.19, 0.81], [0.43, 0.57], [0.72, 0.28]],
    },
    "iv": {
        "num_actions": 3,
        "gamma": 0.8,
        "r": [-0.1, -1.0, 0.1, 0.4, 1.5, 0.1],
        "P": [[0.9, 0.1], [0.2, 0.8], [0.7, 0.3], [0.05, 0.95], [0.25, 0.75], [0.3, 0.7]],
    },
}

EXAMPLE_IDS = tuple(sorted(_EXAMPLES))

_logged_repairs = set()


def repair_rows(P_flat):
    """Clamp negative entries to zero and renormalize each row; returns the
    repaired matrix and the indices of rows that needed it."""
    P_flat = np.asarray(P_flat, dtype=float)
    repaired = []
    out = P_flat.copy()
    for i, row in enumerate(out):
        clipped = np.clip(row, 0.0, None)
        if not np.allclose(clipped, row) or abs(clipped.sum() - 1.0) > 1e-12:
            repaired.append(i)
        out[i] = clipped / clipped.sum()
    return out, repaired


def example_mdp(example_id):
    """One of the four shipped two-state MDPs, keyed 'i'..'iv'."""
    try:
        data = _EXAMPLES[example_id]
    except KeyError:
        raise ValueError(
            f"unknown example id {example_id!r}; expected one of {EXAMPLE_IDS}"
        ) from None
    A = data["num_actions"]
    P_flat, repaired = repair_rows(data["P"])
    if repaired and example_id not in _logged_repairs:
        _logged_repairs.add(example_id)
        logger.warning(
            "example %s: repaired transition rows %s (clamped to the simplex)",
            example_id, repaired,
        )
    P = P_flat.reshape(2, A, 2)
    reward = np.asarray(data["r"], dtype=float).reshape(2, A)
    return Mdp(
        num_states=2,
        num_actions=A,
        transition=P,
        reward=reward,
        discount=data["gamma"],
        initial_dist=np.array([0.5, 0.5]),
    )


def worst_deterministic_policy(mdp, max_enumeration=4096):
    """The value-minimizing deterministic policy, by enumeration."""
    num = mdp.num_actions ** mdp.num_states
    if num > max_enumeration:
        raise ValueError(
            f"{num} deterministic policies is too many to enumerate"
        )
    worst, worst_v = None, np.inf
    for assignment in itertools.product(range(mdp.num_actions), repeat=mdp.num_states):
        pi = np.zeros((mdp.num_states, mdp.num_actions))
        pi[np.arange(mdp.num_states), assignment] = 1.0
        v = value_at_initial_dist(mdp, evaluate(mdp, pi).v)
        if v < worst_v:
            worst, worst_v = pi, v
    return worst


def init_logits(mode, mdp, rng=None):
    """Logit table for each initialization mode; softmax gives the policy."""
    S, A = mdp.num_states, mdp.num_actions
    if mode == INIT_CENTER:
        return np.zeros((S, A))
    if mode == INIT_BOUNDARY:
        worst = worst_deterministic_policy(mdp)
        probs = np.where(
            worst > 0, 1.0 - BOUNDARY_DELTA, BOUNDARY_DELTA / (A - 1)
        )
        return np.log(probs)
    if mode == INIT_RANDOM_UNIFORM:
        return check_rng(rng).uniform(0.0, 1.0, size=(S, A))
    raise ValueError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")


def init_policy(mode, mdp, rng=None):
    return softmax(init_logits(mode, mdp, rng))
