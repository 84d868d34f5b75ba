"""Input validation helpers shared across the package."""

import numpy as np

ROW_SUM_ATOL = 1e-12
POLICY_ROW_ATOL = 1e-10


def as_float_array(x, name, ndim=None):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def check_distribution(p, name, atol=ROW_SUM_ATOL):
    """Validate a probability vector: nonnegative, sums to one."""
    p = as_float_array(p, name, ndim=1)
    if np.any(p < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"{name} sums to {p.sum()!r}, expected 1 within {atol}")
    return p


def check_transition_tensor(P, num_states, num_actions, atol=ROW_SUM_ATOL):
    """Validate P[s, a, s']: each (s, a) row a distribution over next states."""
    P = as_float_array(P, "transition", ndim=3)
    if P.shape != (num_states, num_actions, num_states):
        raise ValueError(
            f"transition shape {P.shape} does not match "
            f"({num_states}, {num_actions}, {num_states})"
        )
    if np.any(P < 0):
        raise ValueError("transition has negative entries")
    sums = P.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > atol):
        bad = np.argwhere(np.abs(sums - 1.0) > atol)[0]
        raise ValueError(
            f"transition row (s={bad[0]}, a={bad[1]}) sums to "
            f"{sums[bad[0], bad[1]]!r}, expected 1 within {atol}"
        )
    return P


def check_policy_matrix(pi, num_states, num_actions, atol=POLICY_ROW_ATOL):
    """Validate a row-stochastic policy matrix of shape (num_states, num_actions)."""
    pi = as_float_array(pi, "policy", ndim=2)
    if pi.shape != (num_states, num_actions):
        raise ValueError(
            f"policy shape {pi.shape} does not match ({num_states}, {num_actions})"
        )
    if np.any(pi < 0):
        raise ValueError("policy has negative entries")
    if np.any(np.abs(pi.sum(axis=1) - 1.0) > atol):
        raise ValueError(f"policy rows must sum to 1 within {atol}")
    return pi


def check_rng(rng):
    """Accept a seed or a Generator; always return a Generator."""
    if rng is None:
        raise ValueError("an explicit seed or numpy Generator is required")
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
