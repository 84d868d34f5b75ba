"""Problem-conditioning and geometry metrics: successor representation,
condition numbers, entropy, regret curves and value-polytope sampling."""

import itertools

from dataclasses import dataclass

import numpy as np

from .mdp import check_policy, evaluate, greedy_policy, value_at_initial_dist

KAPPA_EIG_FLOOR = 1e-14


def successor_matrix(mdp, pi):
    """Dense (I - gamma P^pi)^-1, the discounted state-occupancy operator."""
    pi = check_policy(mdp, pi)
    A = np.eye(mdp.num_states) - mdp.discount * mdp.policy_transition(pi)
    try:
        return np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"successor system singular; cond={np.linalg.cond(A):.3e}"
        ) from exc


def condition_number(psi):
    """Ratio of the largest to smallest eigenvalue modulus.

    The spectrum can be complex (state transition matrices are not symmetric),
    so moduli are the only ordered reading; a vanishing smallest modulus is
    reported as +inf.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {psi.shape}")
    moduli = np.abs(np.linalg.eigvals(psi))
    if moduli.min() < KAPPA_EIG_FLOOR:
        return float("inf")
    return float(moduli.max() / moduli.min())


def spectral_radius(psi):
    return float(np.abs(np.linalg.eigvals(psi)).max())


def policy_entropy(pi):
    """Mean over states of -sum_a pi log pi (nonnegative, log|A| at uniform)."""
    pi = np.asarray(pi, dtype=float)
    terms = np.where(pi > 0, pi * np.log(np.maximum(pi, 1e-300)), 0.0)
    return float(-terms.sum(axis=-1).mean() + 0.0)


@dataclass(frozen=True)
class ConditioningReport:
    kappa: float
    spectral_radius: float
    entropy: float


def conditioning_report(mdp, pi):
    psi = successor_matrix(mdp, pi)
    return ConditioningReport(
        kappa=condition_number(psi),
        spectral_radius=spectral_radius(psi),
        entropy=policy_entropy(pi),
    )


def optimal_value(mdp, max_iter=10_000, tol=1e-13):
    """V* by policy iteration run to convergence."""
    pi = np.full((mdp.num_states, mdp.num_actions), 1.0 / mdp.num_actions)
    v_prev = None
    for _ in range(max_iter):
        vals = evaluate(mdp, pi)
        if v_prev is not None and np.max(np.abs(vals.v - v_prev)) <= tol:
            return vals.v
        v_prev = vals.v
        pi = greedy_policy(vals.q)
    raise ArithmeticError("policy iteration failed to converge")


@dataclass(frozen=True)
class RegretSummary:
    gaps: np.ndarray
    cumulative: np.ndarray
    final_gap: float
    v_star_rho: float


def regret(v_rho_trace, mdp, v_star=None):
    """Per-iteration optimality gaps, their running sum and the final gap."""
    v_star = optimal_value(mdp) if v_star is None else v_star
    v_star_rho = value_at_initial_dist(mdp, v_star)
    gaps = v_star_rho - np.asarray(v_rho_trace, dtype=float)
    return RegretSummary(
        gaps=gaps,
        cumulative=np.cumsum(gaps),
        final_gap=float(gaps[-1]),
        v_star_rho=v_star_rho,
    )


@dataclass(frozen=True)
class PolytopeSample:
    """Values of a dense policy grid plus all deterministic-policy corners of
    a two-state MDP, for plotting the attainable region in value space."""

    points: np.ndarray
    corners: np.ndarray
    corner_policies: np.ndarray


def _simplex_grid(num_actions, divisions):
    """All compositions of ``divisions`` into ``num_actions`` parts, scaled."""
    pts = []
    for cuts in itertools.combinations(
        range(divisions + num_actions - 1), num_actions - 1
    ):
        parts = []
        prev = -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(divisions + num_actions - 2 - prev)
        pts.append(parts)
    return np.asarray(pts, dtype=float) / divisions


def default_polytope_resolution(num_actions):
    return 51 if num_actions == 2 else 15


def sample_polytope(mdp, resolution=None):
    """Evaluate V over a product grid of per-state action simplices.

    Only defined for two-state MDPs (the points are planar).
    """
    if mdp.num_states != 2:
        raise ValueError("polytope sampling needs a two-state MDP")
    A = mdp.num_actions
    divisions = resolution if resolution is not None else default_polytope_resolution(A)
    if divisions < 1:
        raise ValueError("resolution must be at least 1")
    rows = _simplex_grid(A, divisions)
    points = np.empty((rows.shape[0] ** 2, 2))
    idx = 0
    for r0 in rows:
        for r1 in rows:
            points[idx] = evaluate(mdp, np.stack([r0, r1])).v
            idx += 1
    corner_policies = []
    corners = []
    for a0 in range(A):
        for a1 in range(A):
            pi = np.zeros((2, A))
            pi[0, a0] = 1.0
            pi[1, a1] = 1.0
            corner_policies.append(pi)
            corners.append(evaluate(mdp, pi).v)
    return PolytopeSample(
        points=points,
        corners=np.asarray(corners),
        corner_policies=np.asarray(corner_policies),
    )
