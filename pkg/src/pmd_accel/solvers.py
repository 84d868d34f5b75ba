"""Estimator-style front end: fit a policy to an MDP.

Both solvers follow the scikit-learn conventions (constructor stores
hyperparameters untouched, ``fit`` returns self, fitted attributes carry a
trailing underscore, ``get_params``/``set_params`` work with clone and
grid-search tooling).
"""

import numpy as np

from sklearn.base import BaseEstimator

from .approx import InnerLoopConfig, run_approx
from .critics import resolve_critic
from .diagnostics import optimal_value, regret
from .exact import LOOKAHEAD_REEVALUATE, UpdateKind, run_exact
from .generators import INIT_CENTER, init_logits
from .mdp import Mdp, check_policy
from .mirror import softmax
from .schedule import GAMMA_RATE, GAMMA_SQUARED_RATE, StepSchedule

ACCELERATED_KINDS = frozenset(
    {
        UpdateKind.LOOKAHEAD,
        UpdateKind.EXTRAGRADIENT,
        UpdateKind.CORRECTION,
        UpdateKind.LAZY_CORRECTION,
        UpdateKind.MOMENTUM,
    }
)


def default_step_mode(kind):
    """Plain updates anneal at the one-step rate, accelerated ones at the
    squared rate."""
    return GAMMA_SQUARED_RATE if UpdateKind(kind) in ACCELERATED_KINDS else GAMMA_RATE


def _check_mdp(mdp):
    if not isinstance(mdp, Mdp):
        raise ValueError(f"fit expects an Mdp, got {type(mdp).__name__}")
    return mdp


class _BasePmdSolver(BaseEstimator):
    def _resolve_common(self, mdp, initial_policy):
        mdp = _check_mdp(mdp)
        kind = UpdateKind(self.variant)
        mode = self.step_mode or default_step_mode(kind)
        sched = StepSchedule(epsilon0=self.epsilon0, mode=mode)
        critic = resolve_critic(self.critic)
        rng = np.random.default_rng(self.random_state)
        if initial_policy is None:
            theta0 = init_logits(self.init, mdp, rng)
        else:
            theta0 = np.log(
                np.clip(check_policy(mdp, initial_policy), 1e-15, 1.0)
            )
        return mdp, kind, sched, critic, rng, theta0

    def _finalize(self, mdp, trace):
        self.history_ = trace
        self.policy_ = trace.policies[-1]
        self.value_ = trace.values[-1]
        self.v_rho_ = trace.v_rho[-1]
        self.v_star_ = optimal_value(mdp)
        summary = regret(trace.v_rho, mdp, v_star=self.v_star_)
        self.gap_ = summary.final_gap
        self.cumulative_regret_ = float(summary.cumulative[-1])
        self.n_iter_ = trace.num_iterations
        return self

    def predict(self, states=None):
        """Greedy action index per state (all states when none are given)."""
        proba = self.predict_proba(states)
        return np.argmax(proba, axis=-1)

    def predict_proba(self, states=None):
        if not hasattr(self, "policy_"):
            raise AttributeError("solver is not fitted yet; call fit first")
        if states is None:
            return self.policy_
        return self.policy_[np.asarray(states, dtype=int)]

    def score(self, mdp=None, y=None):
        """Expected discounted return of the fitted policy from the initial
        state distribution."""
        if not hasattr(self, "v_rho_"):
            raise AttributeError("solver is not fitted yet; call fit first")
        return self.v_rho_


class PolicyMirrorDescent(_BasePmdSolver):
    """Closed-form proximal policy optimization on a finite MDP.

    Parameters mirror the update catalog: ``variant`` picks the step rule,
    ``epsilon0``/``step_mode`` the adaptive step-size schedule, ``critic`` the
    action-value provider (exact when None).
    """

    def __init__(
        self,
        variant="pmd",
        n_iterations=20,
        epsilon0=1e-4,
        step_mode=None,
        lookahead_return=LOOKAHEAD_REEVALUATE,
        mirror_map="neg_entropy",
        critic=None,
        init=INIT_CENTER,
        random_state=None,
    ):
        self.variant = variant
        self.n_iterations = n_iterations
        self.epsilon0 = epsilon0
        self.step_mode = step_mode
        self.lookahead_return = lookahead_return
        self.mirror_map = mirror_map
        self.critic = critic
        self.init = init
        self.random_state = random_state

    def fit(self, mdp, initial_policy=None):
        mdp, kind, sched, critic, rng, theta0 = self._resolve_common(
            mdp, initial_policy
        )
        trace = run_exact(
            mdp,
            softmax(theta0),
            kind,
            self.n_iterations,
            critic=critic,
            sched=sched,
            mirror_map=self.mirror_map,
            rng=rng,
            lookahead_return=self.lookahead_return,
        )
        return self._finalize(mdp, trace)


class ApproximatePolicyMirrorDescent(_BasePmdSolver):
    """Parametric softmax-policy optimization by inner-loop gradient descent.

    ``k``/``n`` are the per-iteration update counts for the main and
    intermediary policies, ``beta`` the inner learning rate, ``form`` selects
    the proximal or projection surrogate.
    """

    def __init__(
        self,
        variant="pmd",
        n_iterations=20,
        k=50,
        n=0,
        beta=0.1,
        epsilon0=1e-4,
        step_mode=None,
        lookahead_return=LOOKAHEAD_REEVALUATE,
        form="proximal",
        critic=None,
        init=INIT_CENTER,
        random_state=None,
    ):
        self.variant = variant
        self.n_iterations = n_iterations
        self.k = k
        self.n = n
        self.beta = beta
        self.epsilon0 = epsilon0
        self.step_mode = step_mode
        self.lookahead_return = lookahead_return
        self.form = form
        self.critic = critic
        self.init = init
        self.random_state = random_state

    def fit(self, mdp, initial_policy=None):
        mdp, kind, sched, critic, rng, theta0 = self._resolve_common(
            mdp, initial_policy
        )
        cfg = InnerLoopConfig(k=self.k, n=self.n, beta=self.beta)
        trace = run_approx(
            mdp,
            theta0,
            kind,
            self.n_iterations,
            critic=critic,
            sched=sched,
            cfg=cfg,
            rng=rng,
            lookahead_return=self.lookahead_return,
            form=self.form,
        )
        self.logits_ = trace.theta
        return self._finalize(mdp, trace)
