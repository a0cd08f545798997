"""Experiment harness: config schema, runners, and CSV/meta emission.

Three experiments reproduce the figure protocols: ``phase`` (separability
fraction vs the predicted threshold), ``ge-sweep`` (theory and Monte Carlo
generalization error per potential over a delta grid), and ``support``
(miss/false-alarm rates of the thresholded sparse estimate). Trials run on
derived per-trial streams, optionally in a thread pool; aggregation sorts by
trial index so output is byte-identical at any concurrency level.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import __version__
from .empirical import evaluate, generate_dataset, separability_test, solve_primal_dual
from .numerics import RngStream
from .potentials import Potential, Prior
from .summary import LinkFunction
from .theory import (
    InfeasibleRegimeError,
    ModelSpec,
    SolverError,
    delta_star,
    solve_l2,
    solve_system,
    support_recovery,
    theory_report,
)

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "PRESETS",
    "preset_config",
    "run_experiment",
    "run_phase",
    "run_ge_sweep",
    "run_support",
    "rows_to_csv",
    "write_outputs",
    "CSV_HEADER",
]

DEFAULT_SUPPORT_THRESHOLD = 1e-5  # 10x the primal feasibility tolerance


class ExperimentConfig(BaseModel):
    """Validated experiment description; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    experiment: Literal["phase", "ge-sweep", "support"]
    kappa_grid: list[float] = Field(min_length=1)
    delta_grid: list[float] = Field(min_length=1)
    prior: Literal["gaussian", "sparse", "binary"] = "gaussian"
    sparsity: float = 1.0
    potentials: list[Literal["l1", "l2", "linf"]] = ["l2"]
    p: int = 100
    trials: int = 20
    base_seed: int = 1
    link: Literal["std", "fig1"] = "std"
    delta_relative: bool = False
    workers: int = 1
    support_threshold: float = DEFAULT_SUPPORT_THRESHOLD

    @model_validator(mode="after")
    def _check(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if any(d <= 0 for d in self.delta_grid):
            raise ValueError("delta grid entries must be > 0")
        if any(b <= a for a, b in zip(self.delta_grid, self.delta_grid[1:])):
            raise ValueError("delta grid must be strictly increasing")
        if any(k < 0 for k in self.kappa_grid):
            raise ValueError("kappa grid entries must be >= 0")
        if len(set(self.potentials)) != len(self.potentials):
            raise ValueError("potentials must be unique")
        if not (0.0 < self.sparsity <= 1.0):
            raise ValueError("sparsity must be in (0, 1]")
        if self.support_threshold <= 0:
            raise ValueError("support_threshold must be > 0")
        if self.experiment == "support" and (
            self.prior != "sparse" or self.potentials != ["l1"]
        ):
            raise ValueError("support experiment requires prior=sparse, potentials=[l1]")
        if self.delta_relative and self.experiment != "phase":
            raise ValueError("delta_relative applies to the phase experiment only")
        return self

    def make_prior(self, kappa: float) -> Prior:
        if self.prior == "gaussian":
            return Prior.gaussian(kappa)
        if self.prior == "sparse":
            return Prior.sparse_gaussian(self.sparsity, kappa)
        return Prior.binary(kappa)

    def make_link(self) -> LinkFunction:
        return LinkFunction.from_tag(self.link)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    metric: str
    kappa: float
    delta: float
    potential: str
    prior: str
    theory: Optional[float]
    empirical_mean: Optional[float]
    empirical_stderr: Optional[float]
    trials: int
    failures: int


CSV_HEADER = [
    "experiment", "metric", "kappa", "delta", "potential", "prior",
    "theory", "empirical_mean", "empirical_stderr", "trials", "failures",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return format(value, ".9g")
    return str(value)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            r.experiment, r.metric, _fmt(r.kappa), _fmt(r.delta), r.potential,
            r.prior, _fmt(r.theory), _fmt(r.empirical_mean),
            _fmt(r.empirical_stderr), r.trials, r.failures,
        ])
    return buf.getvalue()


def _map_trials(fn, trials: int, workers: int):
    """Per-trial results ordered by trial index regardless of scheduling."""
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


_POT_INDEX = {"": 0, "l1": 1, "l2": 2, "linf": 3}


def _stream_base(kappa_idx: int, pot_tag_or_idx, delta_idx: int) -> int:
    """Deterministic per-row offset for trial stream ids."""
    pot_idx = _POT_INDEX.get(pot_tag_or_idx, pot_tag_or_idx) if isinstance(
        pot_tag_or_idx, str) else pot_tag_or_idx
    return ((kappa_idx * 8 + pot_idx) * 256 + delta_idx) * 100_000


def _mean_stderr(values: list[float]) -> tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    arr = np.array(values)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, stderr


def run_phase(config: ExperimentConfig) -> list[ResultRow]:
    """Separable fraction per (kappa, delta) against the theory threshold."""
    link = config.make_link()
    rows = []
    for ki, kappa in enumerate(config.kappa_grid):
        ds = delta_star(kappa, link)
        for di, rel_delta in enumerate(config.delta_grid):
            delta = rel_delta * ds if config.delta_relative else rel_delta
            n = max(1, round(config.p / delta))
            prior = config.make_prior(max(kappa, 1e-6))
            row_id = _stream_base(ki, 0, di)

            def one_trial(t: int, n=n, prior=prior, row_id=row_id) -> float:
                rng = RngStream(config.base_seed, row_id + t)
                data = generate_dataset(config.p, n, prior, link, rng)
                separable, _ = separability_test(data)
                return 1.0 if separable else 0.0

            outcomes = _map_trials(one_trial, config.trials, config.workers)
            frac = float(np.mean(outcomes))
            stderr = math.sqrt(frac * (1.0 - frac) / config.trials)
            rows.append(ResultRow(
                experiment="phase", metric="separable-fraction", kappa=kappa,
                delta=delta, potential="", prior=config.prior, theory=ds,
                empirical_mean=frac, empirical_stderr=stderr,
                trials=config.trials, failures=0,
            ))
    return rows


def _theory_solution(prior: Prior, potential: Potential, spec: ModelSpec, warm):
    if potential is Potential.L2_SQUARED:
        return solve_l2(spec, x0=warm)
    return solve_system(prior, potential, spec, x0=warm)


def run_ge_sweep(config: ExperimentConfig) -> list[ResultRow]:
    """Theory GE per potential plus Monte Carlo means over the delta grid.

    Rows come out sorted by (prior, potential, delta). The theory pass walks
    each potential's delta grid downward with warm starts (continuation
    toward the phase boundary); infeasible deltas yield rows with empty
    theory and no trials.
    """
    link = config.make_link()
    rows = []
    for ki, kappa in enumerate(config.kappa_grid):
        prior = config.make_prior(kappa)
        for pot_tag in sorted(config.potentials):
            potential = Potential.from_tag(pot_tag)
            theory_ge: dict[float, Optional[float]] = {}
            warm = None
            for delta in sorted(config.delta_grid, reverse=True):
                spec = ModelSpec(kappa=kappa, delta=delta, link=link)
                try:
                    vars = _theory_solution(prior, potential, spec, warm)
                    warm = vars
                    theory_ge[delta] = theory_report(vars, spec).gen_error
                except InfeasibleRegimeError:
                    theory_ge[delta] = None
                except SolverError:
                    theory_ge[delta] = None
            for di, delta in enumerate(config.delta_grid):
                ge = theory_ge[delta]
                if ge is None:
                    rows.append(ResultRow(
                        experiment="ge-sweep", metric="gen-error", kappa=kappa,
                        delta=delta, potential=pot_tag, prior=config.prior,
                        theory=None, empirical_mean=None, empirical_stderr=None,
                        trials=0, failures=0,
                    ))
                    continue
                n = max(1, round(config.p / delta))
                row_id = _stream_base(ki, pot_tag, di)

                def one_trial(t: int, n=n, row_id=row_id):
                    rng = RngStream(config.base_seed, row_id + t)
                    data = generate_dataset(config.p, n, prior, link, rng)
                    res = solve_primal_dual(data, potential)
                    if not res.converged:
                        return None
                    return evaluate(data, res.estimate).gen_error

                outcomes = _map_trials(one_trial, config.trials, config.workers)
                values = [v for v in outcomes if v is not None]
                mean, stderr = _mean_stderr(values)
                rows.append(ResultRow(
                    experiment="ge-sweep", metric="gen-error", kappa=kappa,
                    delta=delta, potential=pot_tag, prior=config.prior,
                    theory=ge, empirical_mean=mean, empirical_stderr=stderr,
                    trials=config.trials, failures=len(outcomes) - len(values),
                ))
    return rows


def run_support(config: ExperimentConfig) -> list[ResultRow]:
    """Theory vs empirical support miss/false-alarm rates for the l1 sweep."""
    link = config.make_link()
    s = config.sparsity
    rows = []
    for ki, kappa in enumerate(config.kappa_grid):
        prior = config.make_prior(kappa)
        theory_vals: dict[float, Optional[tuple[float, float]]] = {}
        warm = None
        for delta in sorted(config.delta_grid, reverse=True):
            spec = ModelSpec(kappa=kappa, delta=delta, link=link)
            try:
                vars = solve_system(prior, Potential.L1, spec, x0=warm)
                warm = vars
                theory_vals[delta] = support_recovery(vars, spec, s)
            except (InfeasibleRegimeError, SolverError):
                theory_vals[delta] = None
        for di, delta in enumerate(config.delta_grid):
            pair = theory_vals[delta]
            p1, p2 = pair if pair is not None else (None, None)
            n = max(1, round(config.p / delta))
            row_id = _stream_base(ki, "l1", di)

            def one_trial(t: int, n=n, row_id=row_id):
                rng = RngStream(config.base_seed, row_id + t)
                data = generate_dataset(config.p, n, prior, link, rng)
                res = solve_primal_dual(data, Potential.L1)
                if not res.converged:
                    return None
                rep = evaluate(data, res.estimate, config.support_threshold)
                return rep.support_miss, rep.support_false_alarm

            if p1 is None:
                rows.append(ResultRow(
                    "support", "support-p1", kappa, delta, "l1", config.prior,
                    None, None, None, 0, 0,
                ))
                continue
            outcomes = _map_trials(one_trial, config.trials, config.workers)
            misses = [o[0] for o in outcomes if o is not None and o[0] is not None]
            alarms = [o[1] for o in outcomes if o is not None and o[1] is not None]
            failures = sum(1 for o in outcomes if o is None)
            mean1, se1 = _mean_stderr(misses)
            rows.append(ResultRow(
                "support", "support-p1", kappa, delta, "l1", config.prior,
                p1, mean1, se1, config.trials, failures,
            ))
            if s < 1.0:
                mean2, se2 = _mean_stderr(alarms)
                rows.append(ResultRow(
                    "support", "support-p2", kappa, delta, "l1", config.prior,
                    p2, mean2, se2, config.trials, failures,
                ))
    return rows


_RUNNERS = {"phase": run_phase, "ge-sweep": run_ge_sweep, "support": run_support}


def run_experiment(config: ExperimentConfig) -> tuple[list[ResultRow], dict]:
    start = time.time()
    rows = _RUNNERS[config.experiment](config)
    meta = {
        "config": config.model_dump(),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "rows": len(rows),
        "wall_time_seconds": round(time.time() - start, 3),
    }
    return rows, meta


def write_outputs(rows: list[ResultRow], meta: dict, out_dir: str | Path,
                  experiment: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{experiment}.csv"
    meta_path = out / f"{experiment}.meta.json"
    csv_path.write_text(rows_to_csv(rows))
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path, meta_path


PRESETS: dict[str, dict] = {
    "fig1": {
        "experiment": "phase",
        "kappa_grid": [0.25, 0.5, 1.0, 2.0, 4.0],
        "delta_grid": [0.5, 0.7, 0.85, 1.0, 1.15, 1.3, 1.6, 2.0],
        "delta_relative": True,
        "p": 150,
        "trials": 20,
        "link": "fig1",
    },
    "fig2": {
        "experiment": "ge-sweep",
        "kappa_grid": [2.0],
        "delta_grid": [1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0],
        "prior": "gaussian",
        "potentials": ["l1", "l2", "linf"],
        "p": 200,
        "trials": 100,
    },
    "fig3": {
        "experiment": "ge-sweep",
        "kappa_grid": [2.0],
        "delta_grid": [1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0],
        "prior": "sparse",
        "sparsity": 0.1,
        "potentials": ["l1", "l2", "linf"],
        "p": 200,
        "trials": 100,
    },
    "fig4": {
        "experiment": "ge-sweep",
        "kappa_grid": [2.0],
        "delta_grid": [0.5, 0.8, 1.2, 2.0, 3.0, 4.0],
        "prior": "binary",
        "potentials": ["l1", "l2", "linf"],
        "p": 200,
        "trials": 100,
    },
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    payload = dict(PRESETS[name])
    payload.update(overrides)
    return ExperimentConfig(**payload)
