"""Experiment configuration: JSON loading, dotted-path overrides, packaged defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .calibration import DEFAULT_TOLERANCE, EmpiricalCurve, SearchSpace, default_empirical_target
from .curriculum import CurriculumGraph, load_curriculum
from .engine import ConfigError, ExperimentConfig
from .policy import ScenarioKind, ScenarioPolicy
from .population import ArchetypeTable, load_archetypes
from .psychodynamics import HazardParams, PsychUpdateParams

__all__ = [
    "ConfigBundle",
    "load_config",
    "config_from_dict",
    "apply_overrides",
    "default_config_path",
    "default_config",
]

_TOP_FIELDS = {
    "cohort_size",
    "horizon_semesters",
    "replications_per_scenario",
    "master_seed",
    "debt_cause_threshold",
    "curriculum",
    "archetypes",
    "hazard",
    "psych",
    "scenarios",
    "calibration",
}

# Echo-only fields written to config_effective.json; accepted (and recomputed)
# so a run's effective config is itself a loadable config.
_DERIVED_FIELDS = {"n_scenarios", "expected_agent_rows", "representative_ability", "derived_cohort_seeds"}

_SCENARIO_KEYS = {
    "A": ScenarioKind.A_HISTORICAL,
    "B": ScenarioKind.B_DIRECT_PROMOTION,
    "C": ScenarioKind.C_SAFETY_NET,
    "A_HISTORICAL": ScenarioKind.A_HISTORICAL,
    "B_DIRECT_PROMOTION": ScenarioKind.B_DIRECT_PROMOTION,
    "C_SAFETY_NET": ScenarioKind.C_SAFETY_NET,
}

_POLICY_FIELDS = {
    "reg_success_scale",
    "debt_resolution_base",
    "ttl_age_threshold",
    "ttl_success_decay",
    "bottleneck_target_fail_rate",
    "nonbottleneck_friction_multiplier",
    "pass_threshold",
    "score_noise_std",
    "near_pass_band",
    "remedial_capacity_fraction",
    "remedial_pass_prob_boost",
    "remedial_stress_cost",
    "remedial_belonging_bonus",
}

_CALIBRATION_FIELDS = {"tolerance", "replications", "search_space", "target", "early_exit", "prune_margin"}


@dataclass(frozen=True)
class ConfigBundle:
    """A resolved experiment config plus its calibration settings."""

    experiment: ExperimentConfig
    search_space: SearchSpace
    target: EmpiricalCurve
    tolerance: float
    early_exit: bool
    prune_margin: float
    raw: dict


def default_config_path() -> Path:
    return Path(str(resources.files("cohortsim.data").joinpath("default_config.json")))


def apply_overrides(data: dict, overrides: list[str] | tuple[str, ...]) -> dict:
    """Apply ``dotted.path=value`` overrides in place; values parse as JSON first.

    The parent path must already exist.  The leaf key may be new (a scenario
    field relying on its default, say); misspelt keys are still rejected by
    the strict section builders afterwards.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"malformed override {item!r}; expected key=value")
        path, raw_value = item.split("=", 1)
        keys = path.split(".")
        node = data
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node:
                raise ConfigError(f"override {item!r}: unknown config path {path!r}")
            node = node[key]
        if not isinstance(node, dict):
            raise ConfigError(f"override {item!r}: unknown config path {path!r}")
        try:
            node[keys[-1]] = json.loads(raw_value)
        except json.JSONDecodeError:
            node[keys[-1]] = raw_value
    return data


def _resolve_source(value, base_dir: Path | None) -> str | dict:
    if isinstance(value, dict):
        return value
    if not isinstance(value, str):
        raise ConfigError("curriculum/archetypes must be a file name or an inline object")
    path = Path(value)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    if not path.exists():
        raise ConfigError(f"referenced file not found: {path}")
    return str(path)


def _build_policy(kind: ScenarioKind, fields: dict) -> ScenarioPolicy:
    unknown = set(fields) - _POLICY_FIELDS
    if unknown:
        raise ConfigError(f"scenario {kind.value}: unknown fields {sorted(unknown)}")
    kwargs = dict(fields)
    if "near_pass_band" in kwargs:
        band = kwargs["near_pass_band"]
        if not (isinstance(band, (list, tuple)) and len(band) == 2):
            raise ConfigError(f"scenario {kind.value}: near_pass_band must be [low, high]")
        kwargs["near_pass_band"] = (float(band[0]), float(band[1]))
    try:
        return ScenarioPolicy(kind=kind, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario {kind.value}: {exc}") from exc


def config_from_dict(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a parsed config mapping.

    Accepts both hand-written configs and a run's config_effective.json (whose
    derived echo fields are ignored and recomputed), so any run directory can
    be reproduced from the file it carries.
    """
    unknown = set(data) - _TOP_FIELDS - _DERIVED_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    for required in ("curriculum", "archetypes", "hazard", "scenarios"):
        if required not in data:
            raise ConfigError(f"missing config field {required!r}")

    try:
        curriculum: CurriculumGraph = load_curriculum(_resolve_source(data["curriculum"], base_dir))
        archetypes: ArchetypeTable = load_archetypes(_resolve_source(data["archetypes"], base_dir))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc

    hazard_fields = data["hazard"]
    if set(hazard_fields) != {"alpha0", "alpha1", "alpha2"}:
        raise ConfigError("hazard must define exactly alpha0, alpha1, alpha2")
    try:
        hazard = HazardParams(**{k: float(v) for k, v in hazard_fields.items()})
        psych = PsychUpdateParams(**{k: float(v) for k, v in data.get("psych", {}).items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    scenarios_block = data["scenarios"]
    unknown_scenarios = set(scenarios_block) - set(_SCENARIO_KEYS)
    if unknown_scenarios:
        raise ConfigError(f"unknown scenario keys {sorted(unknown_scenarios)}; expected A, B, C")
    by_kind = {_SCENARIO_KEYS[key]: fields for key, fields in scenarios_block.items()}
    if len(by_kind) != len(scenarios_block):
        raise ConfigError("duplicate scenario keys")
    policies = tuple(
        _build_policy(kind, by_kind[kind]) for kind in ScenarioKind if kind in by_kind
    )

    cfg = ExperimentConfig(
        curriculum=curriculum,
        archetypes=archetypes,
        hazard=hazard,
        psych=psych,
        scenarios=policies,
        cohort_size=int(data.get("cohort_size", 1343)),
        horizon_semesters=int(data.get("horizon_semesters", 12)),
        replications_per_scenario=int(data.get("replications_per_scenario", 20)),
        master_seed=int(data.get("master_seed", 0)),
        debt_cause_threshold=int(data.get("debt_cause_threshold", 3)),
    )
    cfg.validate()
    return cfg


def _calibration_bundle(data: dict) -> tuple[SearchSpace, EmpiricalCurve, float, bool, float]:
    block = data.get("calibration", {})
    unknown = set(block) - _CALIBRATION_FIELDS
    if unknown:
        raise ConfigError(f"calibration: unknown fields {sorted(unknown)}")
    ranges = block.get("search_space")
    if ranges is None:
        raise ConfigError("calibration.search_space is required to calibrate")
    missing = set(SearchSpace.AXES) - set(ranges)
    if missing:
        raise ConfigError(f"calibration.search_space missing axes {sorted(missing)}")
    space = SearchSpace.from_ranges(
        {name: tuple(ranges[name]) for name in SearchSpace.AXES},
        calibration_replications=int(block.get("replications", 5)),
    )
    target = EmpiricalCurve(tuple(block["target"])) if "target" in block else default_empirical_target()
    tolerance = float(block.get("tolerance", DEFAULT_TOLERANCE))
    early_exit = bool(block.get("early_exit", True))
    prune_margin = float(block.get("prune_margin", 0.02))
    return space, target, tolerance, early_exit, prune_margin


def load_config(
    path: str | Path,
    overrides: list[str] | tuple[str, ...] = (),
    seed: int | None = None,
) -> ConfigBundle:
    """Load a config file, apply overrides and an optional seed override."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config JSON must be an object")
    apply_overrides(data, list(overrides))
    if seed is not None:
        data["master_seed"] = int(seed)
    experiment = config_from_dict(data, base_dir=path.parent)
    space, target, tolerance, early_exit, prune_margin = _calibration_bundle(data)
    return ConfigBundle(
        experiment=experiment,
        search_space=space,
        target=target,
        tolerance=tolerance,
        early_exit=early_exit,
        prune_margin=prune_margin,
        raw=data,
    )


def default_config(overrides: list[str] | tuple[str, ...] = (), seed: int | None = None) -> ConfigBundle:
    """The packaged default experiment (calibrated parameters, default fixtures)."""
    return load_config(default_config_path(), overrides=overrides, seed=seed)
