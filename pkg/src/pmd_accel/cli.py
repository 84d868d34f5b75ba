"""Command-line interface.

Subcommands: run, list-studies, validate, polytope, evaluate. Exit codes:
0 success, 2 configuration/usage errors, 1 runtime failures.
"""

import argparse
import json
import os
import sys

from pathlib import Path

import numpy as np

from .experiments import STUDIES, load_spec, run_experiment, write_polytope_points
from .generators import EXAMPLE_IDS, example_mdp
from .mdp import Mdp, evaluate, value_at_initial_dist

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

SEED_ENV_VAR = "PMD_ACCEL_SEED"


class ConfigError(Exception):
    pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pmd-accel",
        description="Policy mirror descent with functional acceleration: "
        "experiment runner and MDP utilities.",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker count")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment spec (TOML/JSON)")
    p_run.add_argument("spec", help="path to the spec file")

    sub.add_parser("list-studies", help="print the available study names")

    p_val = sub.add_parser("validate", help="check an MDP JSON file")
    p_val.add_argument("mdp", help="path to the MDP JSON file")

    p_poly = sub.add_parser("polytope", help="sample the value polytope of an example MDP")
    p_poly.add_argument("example", choices=EXAMPLE_IDS)
    p_poly.add_argument("--resolution", type=int, default=None)

    p_eval = sub.add_parser("evaluate", help="evaluate a policy on an MDP")
    p_eval.add_argument("mdp", help="path to the MDP JSON file")
    p_eval.add_argument("policy", help="path to the policy JSON file")
    return parser


def resolve_seed(args_seed, spec_seed=None):
    if args_seed is not None:
        return args_seed
    if spec_seed is not None:
        return spec_seed
    env = os.environ.get(SEED_ENV_VAR)
    return int(env) if env else 0


def _load_mdp_file(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such file: {path}")
    try:
        return Mdp.from_json(path.read_text())
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid MDP file {path}: {exc}") from exc


def cmd_run(args):
    path = Path(args.spec)
    if not path.exists():
        raise ConfigError(f"no such spec file: {path}")
    env_seed = os.environ.get(SEED_ENV_VAR)
    seed = args.seed if args.seed is not None else (
        int(env_seed) if env_seed else None
    )
    try:
        spec = load_spec(path, seed_override=seed, out_override=args.out)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid spec {path}: {exc}") from exc
    paths = run_experiment(spec, threads=max(1, args.threads))
    for name, p in sorted(paths.items()):
        print(f"{name}: {p}")
    return EXIT_OK


def cmd_list_studies(args):
    for name in sorted(STUDIES):
        print(name)
    return EXIT_OK


def cmd_validate(args):
    mdp = _load_mdp_file(args.mdp)
    print(
        f"ok: {mdp.num_states} states, {mdp.num_actions} actions, "
        f"gamma={mdp.discount}"
    )
    return EXIT_OK


def cmd_polytope(args):
    mdp = example_mdp(args.example)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = write_polytope_points(
        mdp, out_dir / f"polytope_{args.example}.csv", resolution=args.resolution
    )
    print(f"points: {path}")
    return EXIT_OK


def cmd_evaluate(args):
    mdp = _load_mdp_file(args.mdp)
    policy_path = Path(args.policy)
    if not policy_path.exists():
        raise ConfigError(f"no such file: {policy_path}")
    try:
        obj = json.loads(policy_path.read_text())
        pi = np.asarray(obj["policy"] if isinstance(obj, dict) else obj, dtype=float)
        vals = evaluate(mdp, pi)
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid policy file {policy_path}: {exc}") from exc
    print(
        json.dumps(
            {
                "v": vals.v.tolist(),
                "q": vals.q.tolist(),
                "v_rho": value_at_initial_dist(mdp, vals.v),
            },
            indent=2,
        )
    )
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "list-studies": cmd_list_studies,
    "validate": cmd_validate,
    "polytope": cmd_polytope,
    "evaluate": cmd_evaluate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
