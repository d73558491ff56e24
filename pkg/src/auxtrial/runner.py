"""Mode dispatch: turn a validated configuration into artifacts on disk."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, resolve_out_dir
from .data import TrialDataset
from .experiments import (Manifest, Stopwatch, config_digest, simulate_groupseq_oc,
                          simulate_multitest_oc, simulate_retro_oc)
from .groupseq import boundary_thresholds
from .multitest import enumerate_single_patient_rules
from .prior import prior_predictive_report
from .tables import emit_table
from .utility import (MultitestUtilityEngine, SequentialUtilityEngine, optimize_params)


def run_experiment(cfg: ExperimentConfig) -> Manifest:
    """Execute one experiment; deterministic given (config, seed) regardless
    of worker count. Emits CSV tables plus a JSON manifest; per-cell
    failures are recorded in the manifest instead of aborting the rest."""
    out = resolve_out_dir(cfg)
    manifest = Manifest(mode=cfg.mode, seed=cfg.seed, config_hash=config_digest(cfg.raw),
                        replicates=cfg.replicates, workers=cfg.workers)
    with Stopwatch() as timer:
        handler = {
            "multitest-sim": _run_multitest,
            "calibrate": _run_multitest,
            "groupseq-sim": _run_groupseq,
            "retro-sim": _run_retro,
            "boundaries": _run_boundaries,
            "prior-report": _run_prior_report,
            "enumerate-example": _run_enumeration,
            "optimize": _run_optimize,
        }[cfg.mode]
        handler(cfg, out, manifest)
    manifest.wall_seconds = timer.elapsed
    manifest_path = out / "manifest.json"
    manifest.write(manifest_path)
    manifest.outputs.append(str(manifest_path))
    return manifest


def _emit(records, layout, out: Path, manifest: Manifest) -> None:
    csv_path, text_path = out / "results.csv", out / "results.txt"
    emit_table(records, layout, csv_path, text_path)
    manifest.outputs += [str(csv_path), str(text_path)]


def _run_multitest(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    records = []
    for idx, scenario in enumerate(cfg.scenarios):
        try:
            records.extend(simulate_multitest_oc(
                [scenario], cfg.methods, cfg.alpha, cfg.replicates, cfg.seed + idx,
                cfg.workers))
        except Exception as exc:  # record and continue with remaining cells
            manifest.failures.append({"scenario": scenario.name, "error": str(exc)})
    _emit(records, "method-rows", out, manifest)
    if cfg.mode == "calibrate":
        audit = out / "calibration_audit.csv"
        with open(audit, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "method", "mean_alpha_prime",
                             "bootstrap_samples", "seed"])
            for r in records:
                if "mean_alpha_prime" in r.extras:
                    b = next((m.bootstrap_samples for m in cfg.methods if m.calibrate), "")
                    writer.writerow([r.scenario, r.method,
                                     f"{r.extras['mean_alpha_prime']:.6g}", b, cfg.seed])
        manifest.outputs.append(str(audit))


def _run_groupseq(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    trace_path = None
    if cfg.raw.get("trace"):
        trace_path = out / "traces.jsonl"
        trace_path.write_text("")
        manifest.outputs.append(str(trace_path))
    records = []
    for idx, scenario in enumerate(cfg.scenarios):
        try:
            records.extend(simulate_groupseq_oc(
                [scenario], cfg.designs, cfg.prior, cfg.replicates, cfg.seed + idx,
                cfg.workers, trace_path=trace_path))
        except Exception as exc:
            manifest.failures.append({"scenario": scenario.name, "error": str(exc)})
    _emit(records, "scenario-rows", out, manifest)


def _run_retro(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    pool = TrialDataset.from_csv(cfg.pool_path)
    records = simulate_retro_oc(pool.primary, pool.auxiliary, cfg.perturbations,
                                cfg.n_total, cfg.designs, cfg.prior, cfg.replicates,
                                cfg.seed, cfg.workers)
    _emit(records, "scenario-rows", out, manifest)


def _run_boundaries(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    design = cfg.designs[0]
    schedule = boundary_thresholds(design.n_schedule, design.beta_e, design.alpha)
    path = out / "boundaries.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "n", "spent", "increment", "threshold"])
        for row in schedule.to_rows():
            writer.writerow([row["stage"], row["n"], f"{row['spent']:.10g}",
                             f"{row['increment']:.10g}", f"{row['threshold']:.10g}"])
    manifest.outputs.append(str(path))


def _run_prior_report(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    report = prior_predictive_report(cfg.prior, cfg.n_total, cfg.prevalence,
                                     cfg.replicates or 5000, cfg.seed)
    path = out / "prior_report.csv"
    report.to_csv(path)
    manifest.outputs.append(str(path))


def _run_enumeration(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    rows = enumerate_single_patient_rules()
    path = out / "decision_rules.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rule", "on_00", "on_01", "on_10", "on_11",
                         "level_valid", "expected_utility", "expected_utility_exact"])
        for row in rows:
            a00, a01, a10, a11 = row.actions
            writer.writerow([row.label, a00, a01, a10, a11, int(row.level_valid),
                             f"{float(row.expected_utility):.10f}",
                             str(row.expected_utility)])
    manifest.outputs.append(str(path))


def _run_optimize(cfg: ExperimentConfig, out: Path, manifest: Manifest) -> None:
    search = cfg.search
    if cfg.utility.kind == "multitest":
        trial = cfg.trial
        engine = MultitestUtilityEngine(
            alpha=cfg.alpha, n_total=int(trial.get("n_total", 200)),
            prevalence=np.asarray(trial.get("prevalence", [0.6, 0.4]), dtype=float),
        )
    else:
        engine = SequentialUtilityEngine(cfg.designs[0])
    curve = optimize_params(
        search["method"], search["bounds"], cfg.prior, cfg.utility, engine,
        cfg.replicates, cfg.seed, grid_size=search["grid_size"],
        smooth_frac=search["smooth_frac"], epochs=search["epochs"],
        steps_per_epoch=search["steps_per_epoch"], cooling=search["cooling"],
        restarts=search["restarts"],
    )
    csv_path, json_path = out / "utility_curve.csv", out / "utility_curve.json"
    curve.to_csv(csv_path)
    curve.write_sidecar(json_path)
    manifest.outputs += [str(csv_path), str(json_path)]
