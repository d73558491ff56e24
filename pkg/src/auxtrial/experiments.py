"""Experiment orchestration: scenario sweeps, replicate parallelism, output.

Replicates parallelize across processes; every random stream derives from
(master seed, scenario index, replicate index), and partial results reduce
in replicate order, so outputs are identical for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .data import TrialDataset, compute_summaries
from .groupseq import GroupSeqConfig, boundary_thresholds, run_sequential_trial
from .multitest import (WeightedBonfConfig, auxiliary_augmented_test, bonferroni_test,
                        bootstrap_calibrate, holm_test, auxiliary_only_test,
                        plugin_summary_covariance)
from .prior import PriorHyperparams
from .scenarios import resample_perturb, simulate_trial
from .seeding import rng_for
from .tables import OperatingCharacteristics

METHOD_NAMES = ("auxiliary-augmented", "bonferroni", "holm", "auxiliary-only")


@dataclass(frozen=True)
class MethodSpec:
    """A testing procedure to evaluate: name plus its parameters.

    ``calibrate`` switches the auxiliary-augmented procedure to its
    bootstrap-calibrated variant (per-replicate recalibration of the
    working level from plug-in summary covariances).
    """

    name: str
    beta: float | tuple[float, ...] = 0.0
    calibrate: bool = False
    bootstrap_samples: int = 1000
    prior_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ValueError(f"unknown method {self.name!r}")
        if self.calibrate and self.name != "auxiliary-augmented":
            raise ValueError("only the auxiliary-augmented method is calibrated")

    @property
    def label(self) -> str:
        if self.name == "auxiliary-augmented":
            return self.name + ("-calibrated" if self.calibrate else "")
        return self.name


def _run_methods(data: TrialDataset, methods, alpha: float, rng) -> tuple[np.ndarray, list]:
    summaries = compute_summaries(data)
    k = len(summaries)
    rejections = np.zeros((len(methods), k), dtype=bool)
    alpha_primes = []
    for i, method in enumerate(methods):
        if method.name == "bonferroni":
            decisions = bonferroni_test(summaries, alpha)
        elif method.name == "holm":
            decisions = holm_test(summaries, alpha)
        elif method.name == "auxiliary-only":
            decisions = auxiliary_only_test(summaries, alpha)
        else:
            calibrated = None
            if method.calibrate:
                sbar_tilde, sigma_tilde = plugin_summary_covariance(data)
                cal = bootstrap_calibrate(sbar_tilde, sigma_tilde, method.beta, alpha,
                                          method.bootstrap_samples, rng)
                calibrated = cal.alpha_prime
                alpha_primes.append(calibrated)
            config = WeightedBonfConfig(
                alpha=alpha, beta=np.asarray(method.beta),
                calibrated_alpha=calibrated,
                prior_weights=None if method.prior_weights is None
                else np.asarray(method.prior_weights),
            )
            decisions = auxiliary_augmented_test(summaries, config)
        rejections[i] = [d.reject for d in decisions]
    return rejections, alpha_primes


def _multitest_block(args):
    scenario, methods, alpha, master, scenario_idx, rep_lo, rep_hi = args
    n = rep_hi - rep_lo
    rej = np.zeros((n, len(methods), scenario.k_count), dtype=bool)
    primes = []
    for j, rep in enumerate(range(rep_lo, rep_hi)):
        data = simulate_trial(scenario, rng_for(master, scenario_idx, rep, 0))
        rej[j], ap = _run_methods(data, methods, alpha, rng_for(master, scenario_idx, rep, 1))
        primes.extend(ap)
    return rej, primes


def _parallel_blocks(fn, block_args, workers: int):
    if workers <= 1 or len(block_args) <= 1:
        return [fn(a) for a in block_args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, block_args))


def _blocks(replicates: int, block: int):
    return [(lo, min(lo + block, replicates)) for lo in range(0, replicates, block)]


def simulate_multitest_oc(scenarios, methods, alpha: float, replicates: int,
                          master_seed: int, workers: int = 1,
                          block: int = 250) -> list[OperatingCharacteristics]:
    """Rejection proportions, FWER, and calibration audit per scenario and
    method."""
    records = []
    for s_idx, scenario in enumerate(scenarios):
        args = [(scenario, tuple(methods), alpha, master_seed, s_idx, lo, hi)
                for lo, hi in _blocks(replicates, block)]
        results = _parallel_blocks(_multitest_block, args, workers)
        rej = np.concatenate([r for r, _ in results], axis=0)
        primes = [p for _, ps in results for p in ps]
        null_groups = scenario.gamma() <= 0
        for i, method in enumerate(methods):
            rejections = rej[:, i, :]
            fwer = float(rejections[:, null_groups].any(axis=1).mean()) if null_groups.any() else 0.0
            extras = {}
            if method.calibrate and primes:
                extras["mean_alpha_prime"] = float(np.mean(primes))
            records.append(OperatingCharacteristics(
                scenario=scenario.name or f"scenario-{s_idx + 1}",
                method=method.label, replicates=replicates,
                group_rejection=tuple(float(v) for v in rejections.mean(axis=0)),
                fwer=fwer, extras=extras,
            ))
    return records


def _trace_entry(rep, outcome) -> dict:
    return {
        "replicate": rep, "stop_stage": outcome.stop_stage,
        "rejected": outcome.rejected, "stopped_for": outcome.stopped_for,
        "n_used": outcome.n_used,
        "stages": [
            {"stage": s.stage, "z": s.z, "threshold": s.threshold,
             "predictive_prob": s.predictive_prob}
            for s in outcome.stages
        ],
    }


def _groupseq_block(args):
    (scenario, config, hyper, boundaries, master, cell_idx, rep_lo, rep_hi, trace) = args
    out = []
    traces = []
    for rep in range(rep_lo, rep_hi):
        data = simulate_trial(scenario, rng_for(master, cell_idx, rep, 0))
        outcome = run_sequential_trial(data, config, hyper, boundaries,
                                       rng_for(master, cell_idx, rep, 1))
        out.append((outcome.rejected, outcome.stop_stage, outcome.stopped_for,
                    outcome.n_used))
        if trace:
            traces.append(_trace_entry(rep, outcome))
    return out, traces


def _perturb_block(args):
    (pool_y, pool_s, p_y, p_s, n_total, config, hyper, boundaries, master,
     cell_idx, rep_lo, rep_hi) = args
    out = []
    for rep in range(rep_lo, rep_hi):
        data = resample_perturb(pool_y, pool_s, p_y, p_s, n_total,
                                rng_for(master, cell_idx, rep, 0))
        outcome = run_sequential_trial(data, config, hyper, boundaries,
                                       rng_for(master, cell_idx, rep, 1))
        out.append((outcome.rejected, outcome.stop_stage, outcome.stopped_for,
                    outcome.n_used))
    return out


def _write_traces(trace_path, label, traces) -> None:
    with open(trace_path, "a") as fh:
        for entry in traces:
            fh.write(json.dumps({"cell": label, **entry}, sort_keys=True) + "\n")


def _sequential_record(scenario_name, config, outcomes, replicates) -> OperatingCharacteristics:
    rejected = np.array([o[0] for o in outcomes])
    final_stage = np.array([o[1] for o in outcomes]) == config.stages
    n_used = np.array([o[3] for o in outcomes], dtype=float)
    power = float(rejected.mean())
    final_rej = float((rejected & final_stage).mean())
    return OperatingCharacteristics(
        scenario=scenario_name, method=config.design_kind, replicates=replicates,
        power=power, interim=power - final_rej, final=final_rej,
        expected_n=float(n_used.mean()),
        extras={"futility_rate": float(np.mean([o[2] == "futility" for o in outcomes]))},
    )


def simulate_groupseq_oc(scenarios, designs: list[GroupSeqConfig], hyper: PriorHyperparams,
                         replicates: int, master_seed: int, workers: int = 1,
                         block: int = 25, trace_path=None) -> list[OperatingCharacteristics]:
    """Power/type-I with interim-final decomposition and expected sample size
    per scenario and design kind. Boundaries are shared across designs with
    the same schedule and spending shape. ``trace_path`` appends one
    JSON-lines audit record per replicate (stage Z values, thresholds,
    predictive probabilities, disposition)."""
    records = []
    cell_idx = 0
    for scenario in scenarios:
        for config in designs:
            boundaries = boundary_thresholds(config.n_schedule, config.beta_e, config.alpha)
            args = [(scenario, config, hyper, boundaries, master_seed, cell_idx, lo, hi,
                     trace_path is not None)
                    for lo, hi in _blocks(replicates, block)]
            results = _parallel_blocks(_groupseq_block, args, workers)
            outcomes = [o for blk, _ in results for o in blk]
            if trace_path is not None:
                label = f"{scenario.name or 'scenario'}/{config.design_kind}"
                _write_traces(trace_path, label, [t for _, ts in results for t in ts])
            records.append(_sequential_record(
                scenario.name or "scenario", config, outcomes, replicates))
            cell_idx += 1
    return records


def simulate_retro_oc(pool_y, pool_s, perturbations, n_total: int,
                      designs: list[GroupSeqConfig], hyper: PriorHyperparams,
                      replicates: int, master_seed: int, workers: int = 1,
                      block: int = 25) -> list[OperatingCharacteristics]:
    """Sequential operating characteristics over resampled-and-perturbed
    in-silico trials built from a control pool."""
    records = []
    cell_idx = 0
    for p_y, p_s in perturbations:
        for config in designs:
            boundaries = boundary_thresholds(config.n_schedule, config.beta_e, config.alpha)
            args = [(pool_y, pool_s, p_y, p_s, n_total, config, hyper, boundaries,
                     master_seed, cell_idx, lo, hi)
                    for lo, hi in _blocks(replicates, block)]
            results = _parallel_blocks(_perturb_block, args, workers)
            outcomes = [o for blk in results for o in blk]
            records.append(_sequential_record(
                f"perturb-py{p_y:g}-ps{p_s:g}", config, outcomes, replicates))
            cell_idx += 1
    return records


@dataclass
class Manifest:
    mode: str
    seed: int
    config_hash: str
    replicates: int | None = None
    workers: int = 1
    outputs: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    wall_seconds: float = 0.0

    def write(self, path) -> None:
        payload = {
            "mode": self.mode, "seed": self.seed, "config_hash": self.config_hash,
            "replicates": self.replicates, "workers": self.workers,
            "outputs": self.outputs, "failures": self.failures,
            "wall_seconds": round(self.wall_seconds, 3),
            "versions": _versions(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


def _versions() -> dict:
    import scipy

    return {"auxtrial": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def config_digest(raw_config: dict) -> str:
    return hashlib.sha256(
        json.dumps(raw_config, sort_keys=True, default=str).encode()).hexdigest()


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
