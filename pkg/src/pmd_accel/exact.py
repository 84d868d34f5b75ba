"""Closed-form (non-parametric) proximal policy updates.

Each step maps the current iterate to the next through exact per-state
proximal problems; the accelerated variants differ only in which gradient
vector they feed to the prox and where they anchor the divergence:

* ``pmd``             one prox step on the critic output
* ``lookahead``       prox step on the one-step improved return
* ``extragradient``   tentative prox, gradient re-read at the tentative point,
                      final step from the original iterate
* ``correction``      like extragradient but re-anchored at the tentative point
                      with the first gradient subtracted back out
* ``lazy_correction`` the correction applied with one-iteration delay, reusing
                      the previous critic output
* ``momentum``        the two lazy steps merged into a single extrapolated prox
* ``pi`` / ``vi``     classical baselines (null divergence / value backup)
"""

import enum

from dataclasses import dataclass, replace

import numpy as np

from .critics import resolve_critic
from .mdp import check_policy, evaluate, greedy_policy, value_at_initial_dist
from .mirror import NEG_ENTROPY, prox_step, resolve_mirror_map
from .schedule import StepSchedule, eta_ratio

LOOKAHEAD_ONE_STEP = "one_step"
LOOKAHEAD_REEVALUATE = "reevaluate"


class UpdateKind(str, enum.Enum):
    PI = "pi"
    VI = "vi"
    PMD = "pmd"
    LOOKAHEAD = "lookahead"
    EXTRAGRADIENT = "extragradient"
    CORRECTION = "correction"
    LAZY_CORRECTION = "lazy_correction"
    MOMENTUM = "momentum"


@dataclass(frozen=True)
class IterState:
    """Iterate carried between steps.

    ``q_prev``/``eta_prev`` hold the critic output and step sizes realized at
    the step that produced ``pi``; the lazy variants consume them at t >= 1.
    ``v_iter`` is the running value vector of the value-iteration baseline.
    """

    t: int
    pi: np.ndarray
    pi_tilde: np.ndarray | None = None
    q_prev: np.ndarray | None = None
    eta_prev: np.ndarray | None = None
    v_iter: np.ndarray | None = None

    def require_prev(self):
        if self.t >= 1 and self.q_prev is None:
            raise ValueError(
                "lazy update at t >= 1 needs the previous critic output"
            )


def initial_state(mdp, pi0):
    return IterState(t=0, pi=check_policy(mdp, pi0))


def lookahead_backup(mdp, q_hat, pi_tilde):
    """One-step return of acting with pi_tilde once, then collecting q_hat."""
    next_value = np.einsum("sa,sa->s", pi_tilde, q_hat)
    return mdp.reward + mdp.discount * np.einsum(
        "sap,p->sa", mdp.transition, next_value
    )


def lookahead_q(mdp, critic, q_hat, pi_tilde, mode, rng=None, t=0):
    if mode == LOOKAHEAD_ONE_STEP:
        return lookahead_backup(mdp, q_hat, pi_tilde)
    if mode == LOOKAHEAD_REEVALUATE:
        return critic.estimate(mdp, pi_tilde, rng=rng, t=t)
    raise ValueError(f"unknown lookahead mode {mode!r}")


def step_pmd(state, mdp, critic, sched, *, mirror_map=NEG_ENTROPY, rng=None, **_):
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    eta = sched.eta(q, state.pi, state.t, mdp.discount, mirror_map)
    new_pi = prox_step(q, state.pi, eta, mirror_map)
    return replace(
        state, t=state.t + 1, pi=new_pi, pi_tilde=None, q_prev=q, eta_prev=eta
    )


def step_lookahead(
    state,
    mdp,
    critic,
    sched,
    *,
    sched_tilde=None,
    mirror_map=NEG_ENTROPY,
    rng=None,
    lookahead_return=LOOKAHEAD_REEVALUATE,
    **_,
):
    sched_tilde = sched_tilde or sched
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    pi_tilde = greedy_policy(q)
    q_tilde = lookahead_q(mdp, critic, q, pi_tilde, lookahead_return, rng, state.t)
    eta_tilde = sched_tilde.eta(q_tilde, state.pi, state.t, mdp.discount, mirror_map)
    new_pi = prox_step(q_tilde, state.pi, eta_tilde, mirror_map)
    return replace(
        state, t=state.t + 1, pi=new_pi, pi_tilde=pi_tilde, q_prev=q,
        eta_prev=eta_tilde,
    )


def step_extragradient(
    state,
    mdp,
    critic,
    sched,
    *,
    sched_tilde=None,
    mirror_map=NEG_ENTROPY,
    rng=None,
    lookahead_return=LOOKAHEAD_REEVALUATE,
    **_,
):
    sched_tilde = sched_tilde or sched
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    eta = sched.eta(q, state.pi, state.t, mdp.discount, mirror_map)
    pi_tilde = prox_step(q, state.pi, eta, mirror_map)
    q_tilde = lookahead_q(mdp, critic, q, pi_tilde, lookahead_return, rng, state.t)
    eta_tilde = sched_tilde.eta(q_tilde, state.pi, state.t, mdp.discount, mirror_map)
    new_pi = prox_step(q_tilde, state.pi, eta_tilde, mirror_map)
    return replace(
        state, t=state.t + 1, pi=new_pi, pi_tilde=pi_tilde, q_prev=q,
        eta_prev=eta_tilde,
    )


def step_correction(
    state,
    mdp,
    critic,
    sched,
    *,
    sched_tilde=None,
    mirror_map=NEG_ENTROPY,
    rng=None,
    lookahead_return=LOOKAHEAD_REEVALUATE,
    **_,
):
    sched_tilde = sched_tilde or sched
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    eta = sched.eta(q, state.pi, state.t, mdp.discount, mirror_map)
    pi_tilde = prox_step(q, state.pi, eta, mirror_map)
    q_tilde = lookahead_q(mdp, critic, q, pi_tilde, lookahead_return, rng, state.t)
    eta_tilde = sched_tilde.eta(q_tilde, state.pi, state.t, mdp.discount, mirror_map)
    corrected = q_tilde - (eta / eta_tilde)[:, None] * q
    new_pi = prox_step(corrected, pi_tilde, eta_tilde, mirror_map)
    return replace(
        state, t=state.t + 1, pi=new_pi, pi_tilde=pi_tilde, q_prev=q,
        eta_prev=eta_tilde,
    )


def step_lazy_correction(
    state, mdp, critic, sched, *, mirror_map=NEG_ENTROPY, rng=None, **_
):
    state.require_prev()
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    eta = sched.eta(q, state.pi, state.t, mdp.discount, mirror_map)
    if state.q_prev is None:
        # Bootstrap: treat the previous critic output as the current one, which
        # zeroes the extrapolation and reduces to a plain proximal step.
        q_prev, eta_prev = q, eta
    else:
        q_prev, eta_prev = state.q_prev, state.eta_prev
    ratio = eta_ratio(eta_prev, eta)
    forward_grad = ratio[:, None] * (q - q_prev)
    pi_tilde = prox_step(forward_grad, state.pi, eta_prev, mirror_map)
    new_pi = prox_step(q, pi_tilde, eta, mirror_map)
    return replace(
        state, t=state.t + 1, pi=new_pi, pi_tilde=pi_tilde, q_prev=q, eta_prev=eta
    )


def step_momentum(
    state, mdp, critic, sched, *, mirror_map=NEG_ENTROPY, rng=None, **_
):
    state.require_prev()
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    eta = sched.eta(q, state.pi, state.t, mdp.discount, mirror_map)
    if state.q_prev is None:
        q_prev, eta_prev = q, eta
    else:
        q_prev, eta_prev = state.q_prev, state.eta_prev
    ratio = eta_ratio(eta_prev, eta)
    grad = q + ratio[:, None] * (q - q_prev)
    new_pi = prox_step(grad, state.pi, eta, mirror_map)
    return replace(
        state, t=state.t + 1, pi=new_pi, pi_tilde=None, q_prev=q, eta_prev=eta
    )


def step_pi(state, mdp, critic, sched=None, *, rng=None, **_):
    q = critic.estimate(mdp, state.pi, rng=rng, t=state.t)
    return replace(
        state, t=state.t + 1, pi=greedy_policy(q), pi_tilde=None, q_prev=q,
        eta_prev=None,
    )


def step_vi(state, mdp, critic=None, sched=None, *, rng=None, **_):
    v = state.v_iter
    if v is None:
        v = evaluate(mdp, state.pi).v
    q_backup = mdp.reward + mdp.discount * np.einsum("sap,p->sa", mdp.transition, v)
    return replace(
        state, t=state.t + 1, pi=greedy_policy(q_backup), pi_tilde=None,
        q_prev=q_backup, eta_prev=None, v_iter=q_backup.max(axis=1),
    )


STEP_FUNCTIONS = {
    UpdateKind.PI: step_pi,
    UpdateKind.VI: step_vi,
    UpdateKind.PMD: step_pmd,
    UpdateKind.LOOKAHEAD: step_lookahead,
    UpdateKind.EXTRAGRADIENT: step_extragradient,
    UpdateKind.CORRECTION: step_correction,
    UpdateKind.LAZY_CORRECTION: step_lazy_correction,
    UpdateKind.MOMENTUM: step_momentum,
}


@dataclass
class RunTrace:
    """Per-iteration record of one optimization run.

    ``policies``/``values``/``v_rho`` hold T+1 entries (iterates 0..T);
    ``q_hats``/``etas`` hold the T realized per-step quantities.
    """

    policies: list
    values: list
    v_rho: list
    q_hats: list
    etas: list
    pi_tildes: list
    theta: np.ndarray | None = None

    @property
    def num_iterations(self):
        return len(self.policies) - 1


def run_exact(
    mdp,
    pi0,
    kind,
    T,
    critic=None,
    sched=None,
    *,
    sched_tilde=None,
    mirror_map="neg_entropy",
    rng=None,
    lookahead_return=LOOKAHEAD_REEVALUATE,
):
    """Fold ``T`` closed-form steps of the chosen update over the MDP."""
    kind = UpdateKind(kind)
    critic = resolve_critic(critic)
    sched = sched or StepSchedule()
    mirror_map = resolve_mirror_map(mirror_map)
    step = STEP_FUNCTIONS[kind]
    state = initial_state(mdp, pi0)
    vals = evaluate(mdp, state.pi)
    trace = RunTrace(
        policies=[state.pi],
        values=[vals.v],
        v_rho=[value_at_initial_dist(mdp, vals.v)],
        q_hats=[],
        etas=[],
        pi_tildes=[],
    )
    for _ in range(T):
        state = step(
            state,
            mdp,
            critic,
            sched,
            sched_tilde=sched_tilde,
            mirror_map=mirror_map,
            rng=rng,
            lookahead_return=lookahead_return,
        )
        vals = evaluate(mdp, state.pi)
        trace.policies.append(state.pi)
        trace.values.append(vals.v)
        trace.v_rho.append(value_at_initial_dist(mdp, vals.v))
        trace.q_hats.append(state.q_prev)
        trace.etas.append(state.eta_prev)
        trace.pi_tildes.append(state.pi_tilde)
    return trace
