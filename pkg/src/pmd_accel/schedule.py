"""Adaptive proximal step sizes.

The adaptive rule sets, per state, eta_s = D_h(greedy(Q_s), pi_s) / eps_t
with eps_t = gamma^(c (t+1)) eps0 shrinking geometrically, so the proximal
regularization vanishes at the targeted contraction rate (c = 1 for the
plain update, c = 2 for the accelerated ones).
"""

from dataclasses import dataclass

import numpy as np

from .mdp import greedy_policy
from .mirror import NEG_ENTROPY

GAMMA_RATE = "gamma_rate"
GAMMA_SQUARED_RATE = "gamma_squared_rate"

_RATE_EXPONENT = {GAMMA_RATE: 1, GAMMA_SQUARED_RATE: 2}

ETA_FLOOR = 1e-30
ETA_RATIO_MAX = 0.5


@dataclass(frozen=True)
class StepSchedule:
    """Per-state adaptive step sizes eta_s^t."""

    epsilon0: float = 1e-4
    mode: str = GAMMA_RATE

    def __post_init__(self):
        if self.epsilon0 <= 0:
            raise ValueError("epsilon0 must be positive")
        if self.mode not in _RATE_EXPONENT:
            raise ValueError(
                f"unknown schedule mode {self.mode!r}; "
                f"expected one of {sorted(_RATE_EXPONENT)}"
            )

    def epsilon(self, t, gamma):
        c = _RATE_EXPONENT[self.mode]
        return gamma ** (c * (t + 1)) * self.epsilon0

    def eta(self, q, pi, t, gamma, mirror_map=NEG_ENTROPY):
        """Vector of per-state step sizes for critic output q at iteration t."""
        gap = mirror_map.bregman(greedy_policy(q), pi)
        return np.maximum(gap / self.epsilon(t, gamma), ETA_FLOOR)


@dataclass(frozen=True)
class ConstantStepSchedule:
    """Fixed step size; used by tests and for non-adaptive diagnostics."""

    eta0: float

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")

    def epsilon(self, t, gamma):
        raise AttributeError("constant schedules have no epsilon sequence")

    def eta(self, q, pi, t, gamma, mirror_map=NEG_ENTROPY):
        return np.full(np.asarray(q).shape[0], self.eta0)


def eta_ratio(eta_prev, eta):
    """Momentum coefficient eta^{t-1}/eta^t, clamped to [0, 1/2].

    Raw ratios above the schedule's steady-state value (gamma^c < 1) only
    appear when the divergence-to-greedy collapses at a near-vertex state;
    letting them through turns critic error into an arbitrarily amplified
    extrapolation term. A coefficient c also multiplies the variance of a
    noisy gradient by (1+c)^2 + c^2, so the cap doubles as a stability
    margin for inexact critics: 1/2 keeps that factor at 2.5x while leaving
    the extrapolation strong enough to accelerate the exact setting.
    """
    return np.clip(eta_prev / np.maximum(eta, ETA_FLOOR), 0.0, ETA_RATIO_MAX)
