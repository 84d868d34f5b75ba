"""Mirror maps on the probability simplex: gradients, conjugates, Bregman
divergences, projections and the proximal improvement step.

Two instances ship: the negative Shannon entropy (the default everywhere,
with closed-form softmax updates) and half squared Euclidean norm, kept
around to exercise the interface with a second geometry.
"""

from abc import ABC, abstractmethod

import numpy as np

PROB_FLOOR = 1e-15


def clamp_simplex(p):
    """Clamp probabilities away from zero and renormalize.

    Boundary rows (greedy one-hots) must pass through logarithms safely.
    """
    p = np.asarray(p, dtype=float)
    p = np.clip(p, PROB_FLOOR, 1.0)
    return p / p.sum(axis=-1, keepdims=True)


def softmax(y):
    """Overflow-safe softmax along the last axis."""
    y = np.asarray(y, dtype=float)
    z = y - y.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def canonical_logits(y):
    """Subtract the per-row max so dual points have a unique representative."""
    y = np.asarray(y, dtype=float)
    return y - y.max(axis=-1, keepdims=True)


def project_simplex(y):
    """Euclidean projection of each row of y onto the probability simplex."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    rows = np.atleast_2d(y)
    n = rows.shape[-1]
    u = np.sort(rows, axis=-1)[:, ::-1]
    css = np.cumsum(u, axis=-1) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = n - np.argmax(cond[:, ::-1], axis=-1) - 1
    theta = css[np.arange(rows.shape[0]), rho] / (rho + 1)
    out = np.maximum(rows - theta[:, None], 0.0)
    return out[0] if single else out


class MirrorMap(ABC):
    """Legendre-type convex function with the maps needed for mirror descent."""

    @abstractmethod
    def value(self, p):
        """h(p) for p in the simplex interior."""

    @abstractmethod
    def gradient(self, p):
        """grad h(p), rows mapped to the dual space."""

    @abstractmethod
    def conjugate_gradient(self, y):
        """grad h*(y), dual points mapped back to the primal space."""

    @abstractmethod
    def bregman(self, p, q):
        """D_h(p, q) >= 0, zero iff p == q; broadcasts over leading axes."""

    @abstractmethod
    def project(self, y):
        """Bregman projection onto the simplex of the primal point grad h*(y)."""

    @abstractmethod
    def prox(self, q_values, p, eta):
        """argmin_x -<q, x> + (1/eta) D_h(x, p) over the simplex, row-wise."""


class NegativeEntropy(MirrorMap):
    """Negative Shannon entropy; Bregman divergence is the KL divergence and
    the proximal step is a multiplicative (softmax) update."""

    def value(self, p):
        p = clamp_simplex(p)
        return np.sum(p * np.log(p), axis=-1)

    def gradient(self, p):
        return np.log(clamp_simplex(p)) + 1.0

    def conjugate_gradient(self, y):
        return softmax(y)

    def bregman(self, p, q):
        p = np.asarray(p, dtype=float)
        if np.any(p < 0) or np.any(np.asarray(q, dtype=float) < 0):
            raise ValueError("Bregman divergence arguments must be nonnegative")
        q = clamp_simplex(q)
        ratio = np.where(p > 0, np.log(np.maximum(p, PROB_FLOOR)) - np.log(q), 0.0)
        return np.sum(p * ratio, axis=-1)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.isnan(y)):
            raise ValueError("projection received NaN dual point")
        return softmax(y)

    def prox(self, q_values, p, eta):
        _check_eta(eta)
        p = clamp_simplex(p)
        logits = np.log(p) + _eta_column(eta, p) * np.asarray(q_values, dtype=float)
        return softmax(logits)


class SquaredEuclidean(MirrorMap):
    """h(p) = ||p||^2 / 2; Bregman divergence is half squared distance and the
    proximal step is a Euclidean simplex projection."""

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return 0.5 * np.sum(p * p, axis=-1)

    def gradient(self, p):
        return np.asarray(p, dtype=float).copy()

    def conjugate_gradient(self, y):
        return np.asarray(y, dtype=float).copy()

    def bregman(self, p, q):
        diff = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
        return 0.5 * np.sum(diff * diff, axis=-1)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.isnan(y)):
            raise ValueError("projection received NaN dual point")
        return project_simplex(y)

    def prox(self, q_values, p, eta):
        _check_eta(eta)
        p = np.asarray(p, dtype=float)
        return project_simplex(p + _eta_column(eta, p) * np.asarray(q_values, dtype=float))


def _check_eta(eta):
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0):
        raise ValueError("step size eta must be positive")


def _eta_column(eta, p):
    """Scalar eta, or one eta per row when p is a matrix."""
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0 or np.asarray(p).ndim == 1:
        return eta
    return eta[:, None]


def neg_entropy_bregman(p, q):
    """KL divergence sum_a p_a log(p_a / q_a) with the 0 log 0 = 0 convention."""
    return float(NegativeEntropy().bregman(p, q))


def bregman_project(y, mirror_map):
    """Project a dual point back to the simplex through the mirror map."""
    return mirror_map.project(y)


def prox_step(q_values, p, eta, mirror_map):
    """One proximal policy-improvement step on a simplex row (or batch of rows).

    Equivalent to bregman_project(grad h(p) + eta * q); for negative entropy
    the closed form is p_a exp(eta q_a), renormalized.
    """
    return mirror_map.prox(q_values, p, eta)


NEG_ENTROPY = NegativeEntropy()
SQUARED_EUCLIDEAN = SquaredEuclidean()

MIRROR_MAPS = {
    "neg_entropy": NEG_ENTROPY,
    "euclidean": SQUARED_EUCLIDEAN,
}


def resolve_mirror_map(m):
    if isinstance(m, MirrorMap):
        return m
    if m is None:
        return NEG_ENTROPY
    try:
        return MIRROR_MAPS[m]
    except KeyError:
        raise ValueError(
            f"unknown mirror map {m!r}; expected one of {sorted(MIRROR_MAPS)}"
        ) from None
