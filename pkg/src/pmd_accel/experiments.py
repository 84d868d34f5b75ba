"""Sweep runner and result files.

A study is a grid of cells (sweep value x seed x algorithm). Every cell
regenerates its MDP deterministically from the master seed, so all algorithms
within a (sweep value, seed) pair see the same problem and the comparison is
paired. Results land in one flat CSV (fixed schema), a JSON summary with
per-cell aggregates, and, for polytope studies, a boundary-sample points file.
"""

import csv
import json
import time

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .approx import InnerLoopConfig, run_approx
from .critics import ExactCritic, MonteCarloCritic, NoisyCritic
from .diagnostics import (
    condition_number,
    optimal_value,
    policy_entropy,
    regret,
    sample_polytope,
    successor_matrix,
)
from .exact import LOOKAHEAD_REEVALUATE, UpdateKind, run_exact
from .generators import (
    INIT_CENTER,
    INIT_MODES,
    RandomMdpSpec,
    example_mdp,
    generate_random_mdp,
    init_logits,
)
from .mirror import softmax
from .schedule import StepSchedule
from .solvers import default_step_mode

CSV_HEADER = [
    "study", "algo", "seed", "sweep_param", "sweep_value",
    "t", "v_rho", "gap", "cum_regret", "kappa", "entropy",
]
POLYTOPE_EXTRA = ["v_s1", "v_s2", "policy_json"]
POINTS_HEADER = ["v_s1", "v_s2", "kind"]

EXACT_ONLY_KINDS = frozenset({UpdateKind.PI, UpdateKind.VI})

SWEEP_B = "sweep_b"
SWEEP_GAMMA = "sweep_gamma"
SWEEP_K = "sweep_k"
SWEEP_ACTIONS = "sweep_actions"
POLYTOPE_DYNAMICS = "polytope_dynamics"
INEXACT_CONTROLLED = "inexact_controlled"
INEXACT_NATURAL = "inexact_natural"

STUDIES = {
    SWEEP_B: {
        "sweep_param": "branching",
        "sweep_values": [5, 10, 20, 30, 40],
        "algorithms": ["pi", "pmd", "momentum"],
        "T": 10,
        "seeds": 50,
        "mdp": {"num_states": 100, "num_actions": 10, "branching": 5, "gamma": 0.95},
        "hyperparameters": {"k": 100, "n": 0, "beta": 0.5},
    },
    SWEEP_GAMMA: {
        "sweep_param": "gamma",
        "sweep_values": [0.85, 0.9, 0.95, 0.98],
        "algorithms": ["pi", "pmd", "momentum"],
        "T": 10,
        "seeds": 50,
        "mdp": {"num_states": 100, "num_actions": 10, "branching": 5, "gamma": 0.95},
        "hyperparameters": {"k": 30, "n": 0, "beta": 0.5},
    },
    SWEEP_K: {
        "sweep_param": "k",
        "sweep_values": [1, 5, 10, 20, 30],
        "algorithms": ["pi", "pmd", "momentum"],
        "T": 10,
        "seeds": 50,
        "mdp": {"num_states": 100, "num_actions": 10, "branching": 5, "gamma": 0.95},
        "hyperparameters": {"k": 30, "n": 0, "beta": 0.5},
    },
    SWEEP_ACTIONS: {
        "sweep_param": "num_actions",
        "sweep_values": [2, 5, 10, 15],
        "algorithms": ["pi", "pmd", "momentum"],
        "T": 20,
        "seeds": 50,
        "mdp": {"num_states": 100, "num_actions": 10, "branching": 5, "gamma": 0.95},
        "hyperparameters": {"k": 100, "n": 0, "beta": 0.5},
    },
    POLYTOPE_DYNAMICS: {
        "sweep_param": "none",
        "sweep_values": [None],
        "algorithms": [
            "pi", "pmd", "lookahead", "extragradient",
            "correction", "lazy_correction", "momentum",
        ],
        "T": 50,
        "seeds": 1,
        "mdp": "i",
        "hyperparameters": {"k": 50, "n": 50, "beta": 0.1},
    },
    INEXACT_CONTROLLED: {
        "sweep_param": "tau",
        "sweep_values": [0.1, 0.5, 1.0],
        "algorithms": ["pi", "pmd", "momentum"],
        "T": 50,
        "seeds": 50,
        "mdp": "i",
        "hyperparameters": {"k": 50, "n": 0, "beta": 0.1, "init_mode": "random_uniform"},
    },
    INEXACT_NATURAL: {
        "sweep_param": "m",
        "sweep_values": [1, 10, 100],
        "algorithms": ["pi", "pmd", "momentum"],
        "T": 50,
        "seeds": 50,
        "mdp": "i",
        "hyperparameters": {"k": 50, "n": 0, "beta": 0.1, "init_mode": "random_uniform"},
    },
}

DEFAULT_HYPERPARAMETERS = {
    "k": 50,
    "n": 0,
    "beta": 0.1,
    "epsilon0": 1e-4,
    "tau": 0.5,
    "m": 10,
    "init_mode": INIT_CENTER,
    "lane": "approx",
    "lookahead_return": LOOKAHEAD_REEVALUATE,
}


@dataclass(frozen=True)
class ExperimentSpec:
    study: str
    algorithms: tuple
    T: int
    seeds: int
    sweep_values: tuple
    mdp_source: object
    hyperparameters: dict
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(
                f"unknown study {self.study!r}; expected one of {sorted(STUDIES)}"
            )
        if self.T < 1 or self.seeds < 0:
            raise ValueError("T must be >= 1 and seeds >= 0")
        for algo in self.algorithms:
            UpdateKind(algo)
        if self.study in (INEXACT_CONTROLLED, INEXACT_NATURAL):
            allowed = {"pi", "pmd", "momentum"}
            extra = set(self.algorithms) - allowed
            if extra:
                raise ValueError(
                    f"inexact studies support only {sorted(allowed)}, got {sorted(extra)}"
                )
        hp = dict(DEFAULT_HYPERPARAMETERS)
        hp.update(self.hyperparameters)
        if hp["init_mode"] not in INIT_MODES:
            raise ValueError(f"unknown init_mode {hp['init_mode']!r}")
        if hp["lane"] not in ("approx", "exact"):
            raise ValueError(f"unknown lane {hp['lane']!r}")
        object.__setattr__(self, "hyperparameters", hp)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))

    @property
    def sweep_param(self):
        return STUDIES[self.study]["sweep_param"]

    @property
    def is_polytope(self):
        return self.study == POLYTOPE_DYNAMICS

    @classmethod
    def from_study_defaults(cls, study, **overrides):
        base = STUDIES[study]
        args = {
            "study": study,
            "algorithms": tuple(base["algorithms"]),
            "T": base["T"],
            "seeds": base["seeds"],
            "sweep_values": tuple(base["sweep_values"]),
            "mdp_source": base["mdp"],
            "hyperparameters": dict(base["hyperparameters"]),
        }
        hp_override = overrides.pop("hyperparameters", None)
        args.update(overrides)
        if hp_override:
            merged = dict(base["hyperparameters"])
            merged.update(hp_override)
            args["hyperparameters"] = merged
        return cls(**args)


def load_spec(path, seed_override=None, out_override=None):
    """Read a TOML or JSON experiment description."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        obj = tomllib.loads(text.decode("utf-8"))
    elif path.suffix == ".json":
        obj = json.loads(text)
    else:
        raise ValueError(f"spec file must be .toml or .json, got {path.suffix!r}")
    study = obj["study"]
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}; expected one of {sorted(STUDIES)}")
    base = STUDIES[study]
    mdp_source = obj.get("mdp", obj.get("example", base["mdp"]))
    hp = dict(base["hyperparameters"])
    hp.update(obj.get("hyperparameters", {}))
    spec = ExperimentSpec(
        study=study,
        algorithms=tuple(obj.get("algorithms", base["algorithms"])),
        T=int(obj.get("T", base["T"])),
        seeds=int(obj.get("seeds", base["seeds"])),
        sweep_values=tuple(obj.get("sweep_values", base["sweep_values"])),
        mdp_source=mdp_source,
        hyperparameters=hp,
        output_dir=out_override or obj.get("output_dir", "out"),
        seed=int(seed_override if seed_override is not None else obj.get("seed", 0)),
    )
    return spec


@dataclass
class RunRecord:
    """Per-iteration trace of one cell run."""

    study: str
    algo: str
    seed: int
    sweep_param: str
    sweep_value: object
    rows: list = field(default_factory=list)

    def append(self, **row):
        if self.rows and row["t"] <= self.rows[-1]["t"]:
            raise ValueError("iteration indices must be strictly increasing")
        self.rows.append(row)


@dataclass
class CellResult:
    algo: str
    sweep_idx: int
    sweep_value: object
    seed: int
    record: RunRecord | None = None
    kappa0: float = float("nan")
    kappa_avg: float = float("nan")
    final_gap: float = float("nan")
    cum_regret: float = float("nan")
    wall_time: float = 0.0
    error: str | None = None


def cell_mdp(spec, sweep_value, seed_idx):
    """The (deterministic) MDP of one cell; shared by all algorithms."""
    if isinstance(spec.mdp_source, str):
        return example_mdp(spec.mdp_source)
    params = dict(spec.mdp_source)
    if spec.sweep_param in ("branching", "gamma", "num_actions"):
        params[spec.sweep_param] = sweep_value
    rng = np.random.default_rng(
        np.random.SeedSequence(spec.seed, spawn_key=(0, seed_idx))
    )
    return generate_random_mdp(RandomMdpSpec(**params, seed=0), rng=rng)


def cell_critic(spec, sweep_value):
    if spec.study == INEXACT_CONTROLLED:
        return NoisyCritic(tau=float(sweep_value))
    if spec.study == INEXACT_NATURAL:
        return MonteCarloCritic(m=int(sweep_value))
    return ExactCritic()


def execute_cell(spec, sweep_idx, seed_idx, algo):
    """Run one (sweep value, seed, algorithm) cell; failures are captured."""
    start = time.perf_counter()
    sweep_value = spec.sweep_values[sweep_idx]
    hp = spec.hyperparameters
    try:
        mdp = cell_mdp(spec, sweep_value, seed_idx)
        critic = cell_critic(spec, sweep_value)
        kind = UpdateKind(algo)
        k = hp["k"]
        if spec.sweep_param == "k" and kind not in EXACT_ONLY_KINDS:
            k = int(sweep_value)
        init_rng = np.random.default_rng(
            np.random.SeedSequence(spec.seed, spawn_key=(1, seed_idx))
        )
        theta0 = init_logits(hp["init_mode"], mdp, init_rng)
        run_rng = np.random.default_rng(
            np.random.SeedSequence(
                spec.seed,
                spawn_key=(2, sweep_idx, seed_idx, list(spec.algorithms).index(algo)),
            )
        )
        sched = StepSchedule(epsilon0=hp["epsilon0"], mode=default_step_mode(kind))
        if kind in EXACT_ONLY_KINDS or hp["lane"] == "exact":
            trace = run_exact(
                mdp, softmax(theta0), kind, spec.T,
                critic=critic, sched=sched, rng=run_rng,
                lookahead_return=hp["lookahead_return"],
            )
        else:
            cfg = InnerLoopConfig(k=k, n=hp["n"], beta=hp["beta"])
            trace = run_approx(
                mdp, theta0, kind, spec.T,
                critic=critic, sched=sched, cfg=cfg, rng=run_rng,
                lookahead_return=hp["lookahead_return"],
            )
        v_star = optimal_value(mdp)
        summary = regret(trace.v_rho, mdp, v_star=v_star)
        kappas = [
            condition_number(successor_matrix(mdp, pi)) for pi in trace.policies
        ]
        record = RunRecord(
            study=spec.study,
            algo=algo,
            seed=seed_idx,
            sweep_param=spec.sweep_param,
            sweep_value=sweep_value,
        )
        for t in range(1, spec.T + 1):
            row = {
                "t": t,
                "v_rho": trace.v_rho[t],
                "gap": float(summary.gaps[t]),
                "cum_regret": float(summary.cumulative[t]),
                "kappa": kappas[t],
                "entropy": policy_entropy(trace.policies[t]),
                "eta_summary": (
                    float(np.mean(trace.etas[t - 1]))
                    if trace.etas[t - 1] is not None
                    else float("nan")
                ),
                "wall_time": time.perf_counter() - start,
            }
            if spec.is_polytope:
                row["v_s1"] = float(trace.values[t][0])
                row["v_s2"] = float(trace.values[t][1])
                row["policy_json"] = json.dumps(trace.policies[t].tolist())
            record.append(**row)
        return CellResult(
            algo=algo,
            sweep_idx=sweep_idx,
            sweep_value=sweep_value,
            seed=seed_idx,
            record=record,
            kappa0=kappas[0],
            kappa_avg=float(np.mean(kappas[:-1])),
            final_gap=summary.final_gap,
            cum_regret=float(summary.cumulative[-1]),
            wall_time=time.perf_counter() - start,
        )
    except Exception as exc:
        return CellResult(
            algo=algo,
            sweep_idx=sweep_idx,
            sweep_value=sweep_value,
            seed=seed_idx,
            error=f"{type(exc).__name__}: {exc}",
            wall_time=time.perf_counter() - start,
        )


def _fmt(x):
    """Shortest round-trip decimal form; deterministic across runs."""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv_rows(spec, results):
    header = CSV_HEADER + (POLYTOPE_EXTRA if spec.is_polytope else [])
    yield header
    for res in results:
        if res.record is None:
            continue
        for row in res.record.rows:
            out = [
                spec.study, res.record.algo, _fmt(res.record.seed),
                res.record.sweep_param, _fmt(res.record.sweep_value),
                _fmt(row["t"]), _fmt(row["v_rho"]), _fmt(row["gap"]),
                _fmt(row["cum_regret"]), _fmt(row["kappa"]), _fmt(row["entropy"]),
            ]
            if spec.is_polytope:
                out += [_fmt(row["v_s1"]), _fmt(row["v_s2"]), row["policy_json"]]
            yield out


def _aggregate(spec, results):
    cells = []
    for sweep_idx, sweep_value in enumerate(spec.sweep_values):
        for algo in spec.algorithms:
            group = [
                r for r in results
                if r.algo == algo and r.sweep_idx == sweep_idx
            ]
            ok = [r for r in group if r.error is None]
            failed = [r for r in group if r.error is not None]
            entry = {
                "algo": algo,
                "sweep_value": sweep_value,
                "n_seeds": len(ok),
                "n_failed": len(failed),
                "failed_seeds": [
                    {"seed": r.seed, "error": r.error} for r in failed
                ],
                "wall_time": float(sum(r.wall_time for r in group)),
            }
            if ok:
                final = np.array([r.final_gap for r in ok])
                cum = np.array([r.cum_regret for r in ok])
                k0 = np.array([r.kappa0 for r in ok])
                kavg = np.array([r.kappa_avg for r in ok])
                entry.update(
                    final_gap_mean=float(final.mean()),
                    final_gap_std=float(final.std()),
                    cum_regret_mean=float(cum.mean()),
                    cum_regret_std=float(cum.std()),
                    kappa0_mean=float(k0.mean()),
                    kappa0_median=float(np.median(k0)),
                    kappa_avg_mean=float(kavg.mean()),
                    kappa_avg_median=float(np.median(kavg)),
                )
            cells.append(entry)
    return cells


def run_experiment(spec, threads=1):
    """Execute the study grid and write results.csv / summary.json (and the
    polytope points file for polytope studies). Returns the written paths."""
    out_dir = Path(spec.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (sweep_idx, seed_idx, algo)
        for sweep_idx in range(len(spec.sweep_values))
        for seed_idx in range(spec.seeds)
        for algo in spec.algorithms
    ]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    _execute_cell_star,
                    [(spec, *task) for task in tasks],
                    chunksize=1,
                )
            )
    else:
        results = [execute_cell(spec, *task) for task in tasks]

    csv_path = out_dir / f"{spec.study}_results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(_csv_rows(spec, results))

    summary = {
        "study": spec.study,
        "seed": spec.seed,
        "T": spec.T,
        "seeds": spec.seeds,
        "sweep_param": spec.sweep_param,
        "sweep_values": list(spec.sweep_values),
        "algorithms": list(spec.algorithms),
        "hyperparameters": spec.hyperparameters,
        "mdp_source": spec.mdp_source,
        "cells": _aggregate(spec, results),
    }
    summary_path = out_dir / f"{spec.study}_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    paths = {"csv": csv_path, "summary": summary_path}
    if spec.is_polytope:
        paths["points"] = write_polytope_points(
            example_mdp(spec.mdp_source) if isinstance(spec.mdp_source, str)
            else cell_mdp(spec, spec.sweep_values[0], 0),
            out_dir / f"{spec.study}_points.csv",
        )
    return paths


def _execute_cell_star(args):
    return execute_cell(*args)


def write_polytope_points(mdp, path, resolution=None):
    sample = sample_polytope(mdp, resolution=resolution)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(POINTS_HEADER)
        for v in sample.points:
            writer.writerow([_fmt(float(v[0])), _fmt(float(v[1])), "sample"])
        for v in sample.corners:
            writer.writerow([_fmt(float(v[0])), _fmt(float(v[1])), "corner"])
    return path
