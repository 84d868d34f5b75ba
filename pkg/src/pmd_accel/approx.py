"""Parametric softmax policies trained by inner-loop gradient descent on the
per-variant composite surrogate objectives.

The policy is a table of logits theta[s, a] with pi_s = softmax(theta_s).
Every surrogate has the shape

    loss(theta) = sum_s w_s * ( -<c_s, pi^theta_s> + a_s * D(pi^theta_s, anchor_s) )

with state weights w = d^t_rho, linear coefficients c, inverse step sizes a
and divergence anchors chosen per variant; gradients are analytic (softmax
Jacobian), so the finite-difference checks in the tests are independent.
"""

from dataclasses import dataclass, replace

import numpy as np

from .critics import resolve_critic
from .exact import (
    LOOKAHEAD_REEVALUATE,
    RunTrace,
    UpdateKind,
    lookahead_q,
)
from .mdp import evaluate, greedy_policy, value_at_initial_dist, visitation
from .mirror import NEG_ENTROPY, clamp_simplex, softmax
from .schedule import StepSchedule, eta_ratio

WEIGHTING_VISITATION = "visitation"
WEIGHTING_UNIFORM = "uniform"


@dataclass(frozen=True)
class InnerLoopConfig:
    """Inner-loop optimizer settings: k updates for the main policy, n for the
    intermediary one, learning rate beta."""

    k: int = 50
    n: int = 0
    beta: float = 0.1
    weighting: str = WEIGHTING_VISITATION

    def __post_init__(self):
        if self.k < 0 or self.n < 0:
            raise ValueError("update counts k and n must be nonnegative")
        if self.beta <= 0:
            raise ValueError("learning rate beta must be positive")
        if self.weighting not in (WEIGHTING_VISITATION, WEIGHTING_UNIFORM):
            raise ValueError(f"unknown weighting {self.weighting!r}")


def policy_from_logits(theta):
    return softmax(theta)


@dataclass(frozen=True)
class Surrogate:
    """Composite objective in canonical form (see module docstring)."""

    weights: np.ndarray
    coeffs: np.ndarray
    inv_step: np.ndarray
    anchor: np.ndarray

    def loss(self, theta):
        p = softmax(theta)
        linear = -np.einsum("sa,sa->s", self.coeffs, p)
        div = NEG_ENTROPY.bregman(p, self.anchor)
        return float(self.weights @ (linear + self.inv_step * div))

    def grad(self, theta):
        p = softmax(theta)
        u = np.log(np.maximum(p, 1e-300)) - np.log(clamp_simplex(self.anchor))
        x = -self.coeffs + self.inv_step[:, None] * u
        centered = x - np.einsum("sa,sa->s", x, p)[:, None]
        return self.weights[:, None] * p * centered


@dataclass(frozen=True)
class ProjectionSurrogate:
    """Bregman-projection objective sum_s w_s D(pi^theta_s, target_s)."""

    weights: np.ndarray
    target: np.ndarray

    def loss(self, theta):
        p = softmax(theta)
        return float(self.weights @ NEG_ENTROPY.bregman(p, self.target))

    def grad(self, theta):
        p = softmax(theta)
        u = np.log(np.maximum(p, 1e-300)) - np.log(clamp_simplex(self.target))
        centered = u - np.einsum("sa,sa->s", u, p)[:, None]
        return self.weights[:, None] * p * centered


@dataclass(frozen=True)
class IterationContext:
    """Everything a variant's surrogate can refer to at one iteration."""

    weights: np.ndarray
    pi: np.ndarray
    q_hat: np.ndarray
    eta: np.ndarray
    q_prev: np.ndarray | None = None
    eta_prev: np.ndarray | None = None
    pi_tilde: np.ndarray | None = None
    q_tilde: np.ndarray | None = None
    eta_tilde: np.ndarray | None = None


def _need(ctx, variant, *names):
    for name in names:
        if getattr(ctx, name) is None:
            raise ValueError(f"{variant.value} surrogate needs ctx.{name}")


def build_surrogate(variant, ctx, which="theta"):
    """Assemble the composite surrogate of a variant for the main policy
    (``theta``) or the intermediary one (``w``)."""
    variant = UpdateKind(variant)
    if which == "w":
        if variant in (UpdateKind.EXTRAGRADIENT, UpdateKind.CORRECTION):
            return Surrogate(ctx.weights, ctx.q_hat, 1.0 / ctx.eta, ctx.pi)
        if variant == UpdateKind.LAZY_CORRECTION:
            _need(ctx, variant, "q_prev", "eta_prev")
            return Surrogate(
                ctx.weights, ctx.q_hat - ctx.q_prev, 1.0 / ctx.eta_prev, ctx.pi
            )
        raise ValueError(f"{variant.value} has no intermediary policy")
    if variant == UpdateKind.PMD:
        return Surrogate(ctx.weights, ctx.q_hat, 1.0 / ctx.eta, ctx.pi)
    if variant in (UpdateKind.LOOKAHEAD, UpdateKind.EXTRAGRADIENT):
        _need(ctx, variant, "q_tilde", "eta_tilde")
        return Surrogate(ctx.weights, ctx.q_tilde, 1.0 / ctx.eta_tilde, ctx.pi)
    if variant == UpdateKind.CORRECTION:
        _need(ctx, variant, "q_tilde", "eta_tilde", "pi_tilde")
        coeffs = ctx.q_tilde - (ctx.eta / ctx.eta_tilde)[:, None] * ctx.q_hat
        return Surrogate(ctx.weights, coeffs, 1.0 / ctx.eta_tilde, ctx.pi_tilde)
    if variant == UpdateKind.LAZY_CORRECTION:
        _need(ctx, variant, "pi_tilde")
        return Surrogate(ctx.weights, ctx.q_hat, 1.0 / ctx.eta, ctx.pi_tilde)
    if variant == UpdateKind.MOMENTUM:
        _need(ctx, variant, "q_prev", "eta_prev")
        ratio = eta_ratio(ctx.eta_prev, ctx.eta)
        coeffs = ctx.q_hat + ratio[:, None] * (ctx.q_hat - ctx.q_prev)
        return Surrogate(ctx.weights, coeffs, 1.0 / ctx.eta, ctx.pi)
    raise ValueError(f"{variant.value} has no parametric surrogate")


def surrogate_loss(theta, variant, ctx, which="theta"):
    return build_surrogate(variant, ctx, which).loss(theta)


def surrogate_grad(theta, variant, ctx, which="theta"):
    return build_surrogate(variant, ctx, which).grad(theta)


def inner_loop_gd(theta0, surrogate, k, beta):
    """Exactly k full-batch gradient steps theta <- theta - beta * grad."""
    theta = np.asarray(theta0, dtype=float).copy()
    for i in range(k):
        g = surrogate.grad(theta)
        if not np.all(np.isfinite(g)):
            raise ArithmeticError(f"non-finite surrogate gradient at inner step {i}")
        theta = theta - beta * g
    return theta


@dataclass(frozen=True)
class ApproxIterState:
    """Iterate of the parametric lane: logit tables for the main policy and,
    for two-policy variants, the intermediary one."""

    t: int
    theta: np.ndarray
    w: np.ndarray | None = None
    q_prev: np.ndarray | None = None
    eta_prev: np.ndarray | None = None


def pgd_target(ctx, momentum=True):
    """Dual-space extrapolated point mapped back to the simplex."""
    f = NEG_ENTROPY.gradient(ctx.pi) + ctx.eta[:, None] * ctx.q_hat
    if momentum and ctx.q_prev is not None:
        f = f + ctx.eta_prev[:, None] * (ctx.q_hat - ctx.q_prev)
    return softmax(f)


def _iteration_context(state, mdp, critic, sched, cfg, rng):
    pi = policy_from_logits(state.theta)
    q_hat = critic.estimate(mdp, pi, rng=rng, t=state.t)
    if cfg.weighting == WEIGHTING_VISITATION:
        weights = visitation(mdp, pi)
    else:
        weights = np.full(mdp.num_states, 1.0 / mdp.num_states)
    eta = sched.eta(q_hat, pi, state.t, mdp.discount)
    q_prev = state.q_prev if state.q_prev is not None else q_hat
    eta_prev = state.eta_prev if state.eta_prev is not None else eta
    return IterationContext(
        weights=weights, pi=pi, q_hat=q_hat, eta=eta, q_prev=q_prev,
        eta_prev=eta_prev,
    )


def step_approx(
    variant,
    state,
    mdp,
    critic,
    sched,
    cfg,
    *,
    sched_tilde=None,
    rng=None,
    lookahead_return=LOOKAHEAD_REEVALUATE,
):
    """One outer iteration: build the variant's surrogate(s) and descend."""
    variant = UpdateKind(variant)
    sched_tilde = sched_tilde or sched
    ctx = _iteration_context(state, mdp, critic, sched, cfg, rng)
    w = state.w

    if variant == UpdateKind.PMD:
        theta = inner_loop_gd(
            state.theta, build_surrogate(variant, ctx), cfg.k, cfg.beta
        )
    elif variant == UpdateKind.MOMENTUM:
        theta = inner_loop_gd(
            state.theta, build_surrogate(variant, ctx), cfg.k + cfg.n, cfg.beta
        )
    elif variant == UpdateKind.LOOKAHEAD:
        pi_tilde = greedy_policy(ctx.q_hat)
        ctx = _with_lookahead(
            ctx, mdp, critic, sched_tilde, pi_tilde, lookahead_return, rng, state.t
        )
        theta = inner_loop_gd(
            state.theta, build_surrogate(variant, ctx), cfg.k, cfg.beta
        )
    elif variant in (UpdateKind.EXTRAGRADIENT, UpdateKind.CORRECTION):
        if w is None:
            w = state.theta.copy()
        w = inner_loop_gd(w, build_surrogate(variant, ctx, "w"), cfg.n, cfg.beta)
        pi_tilde = policy_from_logits(w)
        ctx = _with_lookahead(
            ctx, mdp, critic, sched_tilde, pi_tilde, lookahead_return, rng, state.t
        )
        theta = inner_loop_gd(
            state.theta, build_surrogate(variant, ctx), cfg.k, cfg.beta
        )
    elif variant == UpdateKind.LAZY_CORRECTION:
        if w is None:
            w = state.theta.copy()
        w = inner_loop_gd(w, build_surrogate(variant, ctx, "w"), cfg.n, cfg.beta)
        ctx = replace(ctx, pi_tilde=policy_from_logits(w))
        theta = inner_loop_gd(
            state.theta, build_surrogate(variant, ctx), cfg.k, cfg.beta
        )
    else:
        raise ValueError(f"{variant.value} is not a parametric update")

    return ApproxIterState(
        t=state.t + 1, theta=theta, w=w, q_prev=ctx.q_hat, eta_prev=ctx.eta
    )


def _with_lookahead(ctx, mdp, critic, sched_tilde, pi_tilde, mode, rng, t):
    q_tilde = lookahead_q(mdp, critic, ctx.q_hat, pi_tilde, mode, rng, t)
    eta_tilde = sched_tilde.eta(q_tilde, ctx.pi, t, mdp.discount)
    return replace(ctx, pi_tilde=pi_tilde, q_tilde=q_tilde, eta_tilde=eta_tilde)


def step_pgd_form(variant, state, mdp, critic, sched, cfg, *, rng=None):
    """Projection-form update: descend on D(pi^theta, extrapolated target)."""
    variant = UpdateKind(variant)
    if variant not in (UpdateKind.PMD, UpdateKind.MOMENTUM):
        raise ValueError(f"{variant.value} has no projection-form update")
    ctx = _iteration_context(state, mdp, critic, sched, cfg, rng)
    target = pgd_target(ctx, momentum=variant == UpdateKind.MOMENTUM)
    surrogate = ProjectionSurrogate(ctx.weights, target)
    count = cfg.k + cfg.n if variant == UpdateKind.MOMENTUM else cfg.k
    theta = inner_loop_gd(state.theta, surrogate, count, cfg.beta)
    return ApproxIterState(
        t=state.t + 1, theta=theta, w=state.w, q_prev=ctx.q_hat, eta_prev=ctx.eta
    )


def run_approx(
    mdp,
    theta0,
    variant,
    T,
    critic=None,
    sched=None,
    cfg=None,
    *,
    sched_tilde=None,
    rng=None,
    lookahead_return=LOOKAHEAD_REEVALUATE,
    form="proximal",
):
    """Fold T parametric steps; returns the same trace type as the exact lane
    plus the final logits on the ``theta`` attribute."""
    variant = UpdateKind(variant)
    critic = resolve_critic(critic)
    sched = sched or StepSchedule()
    cfg = cfg or InnerLoopConfig()
    if form not in ("proximal", "pgd"):
        raise ValueError(f"unknown update form {form!r}")
    state = ApproxIterState(t=0, theta=np.asarray(theta0, dtype=float).copy())
    pi = policy_from_logits(state.theta)
    vals = evaluate(mdp, pi)
    trace = RunTrace(
        policies=[pi],
        values=[vals.v],
        v_rho=[value_at_initial_dist(mdp, vals.v)],
        q_hats=[],
        etas=[],
        pi_tildes=[],
    )
    for _ in range(T):
        if form == "pgd":
            state = step_pgd_form(variant, state, mdp, critic, sched, cfg, rng=rng)
        else:
            state = step_approx(
                variant,
                state,
                mdp,
                critic,
                sched,
                cfg,
                sched_tilde=sched_tilde,
                rng=rng,
                lookahead_return=lookahead_return,
            )
        pi = policy_from_logits(state.theta)
        vals = evaluate(mdp, pi)
        trace.policies.append(pi)
        trace.values.append(vals.v)
        trace.v_rho.append(value_at_initial_dist(mdp, vals.v))
        trace.q_hats.append(state.q_prev)
        trace.etas.append(state.eta_prev)
        trace.pi_tildes.append(
            policy_from_logits(state.w) if state.w is not None else None
        )
    trace.theta = state.theta
    return trace
