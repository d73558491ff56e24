"""Experiment configuration: YAML schema, validation, and construction of
the domain objects each mode needs."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .groupseq import DESIGN_KINDS, GroupSeqConfig
from .prior import PriorHyperparams
from .experiments import MethodSpec
from .presets import sequential_scenario, subgroup_scenario
from .scenarios import ScenarioSpec
from .utility import UtilitySpec

MODES = ("multitest-sim", "groupseq-sim", "optimize", "calibrate", "boundaries",
         "prior-report", "enumerate-example", "retro-sim")


@dataclass
class ExperimentConfig:
    mode: str
    seed: int
    raw: dict
    replicates: int | None = None
    workers: int = 1
    out: str = "results"
    alpha: float = 0.05
    scenarios: list[ScenarioSpec] = field(default_factory=list)
    methods: list[MethodSpec] = field(default_factory=list)
    prior: PriorHyperparams | None = None
    designs: list[GroupSeqConfig] = field(default_factory=list)
    utility: UtilitySpec | None = None
    search: dict = field(default_factory=dict)
    trial: dict = field(default_factory=dict)
    pool_path: str | None = None
    perturbations: list[tuple[float, float]] = field(default_factory=list)
    n_total: int | None = None
    prevalence: list[float] | None = None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"invalid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a mapping")
    return config_from_dict(raw)


def _require(raw: dict, key: str, kind, *, context: str = ""):
    name = f"{context}.{key}" if context else key
    if key not in raw:
        raise ConfigError(name, "missing required field")
    value = raw[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(name, f"expected {getattr(kind, '__name__', kind)}")
    return value


def config_from_dict(raw: dict) -> ExperimentConfig:
    mode = _require(raw, "mode", str)
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {MODES}")
    if "seed" not in raw:
        raise ConfigError("seed", "a master seed is mandatory (no wall-clock seeding)")
    seed = _require(raw, "seed", int)

    cfg = ExperimentConfig(mode=mode, seed=seed, raw=raw)
    cfg.workers = int(raw.get("workers", 1))
    if cfg.workers < 1:
        raise ConfigError("workers", "must be at least 1")
    cfg.out = str(raw.get("out", "results"))
    cfg.alpha = float(raw.get("alpha", 0.05))
    if not 0 < cfg.alpha < 1:
        raise ConfigError("alpha", "must lie in (0, 1)")
    if "replicates" in raw:
        cfg.replicates = int(raw["replicates"])
        if cfg.replicates < 1:
            raise ConfigError("replicates", "must be positive")

    if mode in ("multitest-sim", "groupseq-sim", "calibrate", "retro-sim", "optimize"):
        if cfg.replicates is None:
            raise ConfigError("replicates", "required for simulation modes")

    if mode in ("multitest-sim", "groupseq-sim", "calibrate"):
        cfg.scenarios = _parse_scenarios(raw)
    if mode in ("multitest-sim", "calibrate"):
        cfg.methods = _parse_methods(raw)
    if mode == "optimize":
        cfg.utility = _parse_utility(raw)
        cfg.search = _parse_search(raw)
        cfg.trial = raw.get("trial", {})
    if mode in ("groupseq-sim", "retro-sim", "boundaries")\
            or (mode == "optimize" and cfg.utility.kind == "sequential"):
        cfg.designs = _parse_designs(raw, mode)
    if mode in ("groupseq-sim", "retro-sim", "optimize", "prior-report")\
            or (mode == "multitest-sim" and "prior" in raw):
        cfg.prior = _parse_prior(raw)
    if mode == "retro-sim":
        cfg.pool_path = _require(raw, "pool", str)
        cfg.n_total = _require(raw, "n_total", int)
        cfg.perturbations = _parse_perturbations(raw)
    if mode == "prior-report":
        cfg.n_total = _require(raw, "n_total", int)
        cfg.prevalence = [float(v) for v in _require(raw, "prevalence", list)]
    return cfg


def _parse_scenarios(raw: dict) -> list[ScenarioSpec]:
    entries = _require(raw, "scenarios", list)
    if not entries:
        raise ConfigError("scenarios", "list must be nonempty")
    out = []
    for i, entry in enumerate(entries):
        ctx = f"scenarios[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(ctx, "each scenario must be a mapping")
        try:
            if "preset" in entry:
                p = entry["preset"]
                family = _require(p, "family", str, context=ctx + ".preset")
                kind = _require(p, "kind", int, context=ctx + ".preset")
                ratio = float(_require(p, "odds_ratio", (int, float), context=ctx + ".preset"))
                if family == "subgroup":
                    out.append(subgroup_scenario(kind, ratio, int(p.get("groups", 2))))
                elif family == "sequential":
                    out.append(sequential_scenario(kind, ratio, int(p.get("n_total", 200))))
                else:
                    raise ConfigError(ctx + ".preset.family", "must be subgroup or sequential")
            else:
                prevalence = np.asarray(_require(entry, "prevalence", list, context=ctx), dtype=float)
                k = prevalence.shape[0]
                ratio = np.asarray(entry.get("odds_ratio", 1.0), dtype=float)
                if ratio.ndim == 0:
                    ratio = np.full((k, 2), float(ratio))
                out.append(ScenarioSpec(
                    p_primary=np.asarray(_require(entry, "p_primary", list, context=ctx), dtype=float),
                    p_auxiliary=np.asarray(_require(entry, "p_auxiliary", list, context=ctx), dtype=float),
                    odds_ratio=ratio, prevalence=prevalence,
                    n_total=_require(entry, "n_total", int, context=ctx),
                    name=str(entry.get("name", f"scenario-{i + 1}")),
                ))
        except (ValueError, TypeError) as exc:
            raise ConfigError(ctx, str(exc))
    return out


def _parse_methods(raw: dict) -> list[MethodSpec]:
    entries = _require(raw, "methods", list)
    out = []
    for i, entry in enumerate(entries):
        ctx = f"methods[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(ctx, "each method must be a mapping")
        try:
            beta = entry.get("beta", 0.0)
            out.append(MethodSpec(
                name=_require(entry, "name", str, context=ctx),
                beta=tuple(beta) if isinstance(beta, list) else float(beta),
                calibrate=bool(entry.get("calibrate", False)),
                bootstrap_samples=int(entry.get("bootstrap_samples", 1000)),
                prior_weights=tuple(entry["prior_weights"]) if "prior_weights" in entry else None,
            ))
        except ValueError as exc:
            raise ConfigError(ctx, str(exc))
    return out


def _parse_prior(raw: dict) -> PriorHyperparams:
    p = _require(raw, "prior", dict)
    try:
        return PriorHyperparams(
            k_count=int(p.get("k_count", len(raw.get("prevalence", [])) or _infer_k(raw))),
            intercept_y_mean=p["intercept_y_mean"], intercept_y_sd=p["intercept_y_sd"],
            intercept_s_mean=p["intercept_s_mean"], intercept_s_sd=p["intercept_s_sd"],
            sigma2=p["sigma2"], spike_prob=float(p["spike_prob"]),
            slab_mean=p["slab_mean"], slab_var=p["slab_var"],
            beta_shape_v=p["beta_shape_v"], beta_shape_o=p["beta_shape_o"],
            c_spike=float(p.get("c_spike", 0.0)),
            gh_nodes=int(p.get("gh_nodes", 30)),
        )
    except KeyError as exc:
        raise ConfigError(f"prior.{exc.args[0]}", "missing required field")
    except ValueError as exc:
        raise ConfigError("prior", str(exc))


def _infer_k(raw: dict) -> int:
    scenarios = raw.get("scenarios") or []
    for entry in scenarios:
        if isinstance(entry, dict) and "prevalence" in entry:
            return len(entry["prevalence"])
        if isinstance(entry, dict) and "preset" in entry:
            fam = entry["preset"].get("family")
            return 1 if fam == "sequential" else int(entry["preset"].get("groups", 2))
    return 1


def _parse_designs(raw: dict, mode: str) -> list[GroupSeqConfig]:
    d = _require(raw, "design", dict)
    try:
        base = dict(
            n_schedule=tuple(_require(d, "n_schedule", list, context="design")),
            alpha=float(d.get("alpha", raw.get("alpha", 0.05))),
            beta_e=float(d.get("beta_e", 2.0)),
            beta_f=float(d.get("beta_f", 0.13)),
            m_schedule=tuple(d["m_schedule"]) if "m_schedule" in d else None,
            draws=int(d.get("draws", 2000)),
            burn=int(d.get("burn", 500)),
        )
        kinds = d.get("kinds", ["auxiliary-augmented"])
        if mode in ("boundaries", "optimize"):
            kinds = kinds[:1]
        for kind in kinds:
            if kind not in DESIGN_KINDS:
                raise ConfigError("design.kinds", f"must be among {DESIGN_KINDS}")
        return [GroupSeqConfig(design_kind=kind, **base) for kind in kinds]
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("design", str(exc))


def _parse_utility(raw: dict) -> UtilitySpec:
    u = _require(raw, "utility", dict)
    try:
        penalty = u.get("penalty", 0.0)
        return UtilitySpec(
            kind=_require(u, "kind", str, context="utility"),
            penalty=np.asarray(penalty, dtype=float) if isinstance(penalty, list) else float(penalty),
            stage_rewards=tuple(u["stage_rewards"]) if "stage_rewards" in u else None,
            per_patient_cost=float(u.get("per_patient_cost", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError("utility", str(exc))


def _parse_search(raw: dict) -> dict:
    s = _require(raw, "search", dict)
    method = s.get("method", "grid")
    if method not in ("grid", "annealing"):
        raise ConfigError("search.method", "must be grid or annealing")
    bounds = _require(s, "bounds", list, context="search")
    if not bounds or not all(isinstance(b, list) and len(b) == 2 for b in bounds):
        raise ConfigError("search.bounds", "must be a list of [low, high] pairs")
    return {
        "method": method,
        "bounds": [tuple(map(float, b)) for b in bounds],
        "grid_size": s.get("grid_size", 41),
        "smooth_frac": float(s.get("smooth_frac", 0.4)),
        "epochs": int(s.get("epochs", 50)),
        "steps_per_epoch": int(s.get("steps_per_epoch", 4)),
        "cooling": float(s.get("cooling", 0.95)),
        "restarts": int(s.get("restarts", 1)),
    }


def _parse_perturbations(raw: dict) -> list[tuple[float, float]]:
    entries = _require(raw, "perturbations", list)
    out = []
    for i, entry in enumerate(entries):
        ctx = f"perturbations[{i}]"
        if not isinstance(entry, dict) or "p_y" not in entry or "p_s" not in entry:
            raise ConfigError(ctx, "needs p_y and p_s")
        p_y, p_s = float(entry["p_y"]), float(entry["p_s"])
        if not (0 <= p_y <= 1 and 0 <= p_s <= 1):
            raise ConfigError(ctx, "flip probabilities must lie in [0, 1]")
        out.append((p_y, p_s))
    return out


def resolve_out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path
