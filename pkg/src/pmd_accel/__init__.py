"""Tabular policy mirror descent with functional acceleration.

Exact and parametric solvers for the accelerated proximal policy-update
family, three critic models, conditioning diagnostics, MDP generators and a
reproducible sweep harness.
"""

from .approx import (
    ApproxIterState,
    InnerLoopConfig,
    inner_loop_gd,
    run_approx,
    step_approx,
    step_pgd_form,
    surrogate_grad,
    surrogate_loss,
)
from .critics import (
    Critic,
    ExactCritic,
    MonteCarloCritic,
    NoisyCritic,
    exact_q,
    monte_carlo_q,
    noisy_q,
)
from .diagnostics import (
    ConditioningReport,
    PolytopeSample,
    condition_number,
    conditioning_report,
    optimal_value,
    policy_entropy,
    regret,
    sample_polytope,
    spectral_radius,
    successor_matrix,
)
from .exact import (
    IterState,
    RunTrace,
    UpdateKind,
    lookahead_backup,
    run_exact,
    step_correction,
    step_extragradient,
    step_lazy_correction,
    step_lookahead,
    step_momentum,
    step_pi,
    step_pmd,
    step_vi,
)
from .experiments import ExperimentSpec, RunRecord, load_spec, run_experiment
from .generators import (
    RandomMdpSpec,
    example_mdp,
    generate_random_mdp,
    init_logits,
    init_policy,
)
from .mdp import (
    Mdp,
    ValueFunctions,
    evaluate,
    functional_gradient,
    greedy_policy,
    greedy_row,
    pdl_gap,
    value_at_initial_dist,
    visitation,
)
from .mirror import (
    MirrorMap,
    NegativeEntropy,
    SquaredEuclidean,
    bregman_project,
    neg_entropy_bregman,
    prox_step,
    softmax,
)
from .schedule import ConstantStepSchedule, StepSchedule
from .solvers import ApproximatePolicyMirrorDescent, PolicyMirrorDescent

__version__ = "0.1.0"
