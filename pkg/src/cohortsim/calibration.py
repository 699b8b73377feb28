"""Grid-search calibration of the historical scenario to an empirical dropout curve."""

from __future__ import annotations

import dataclasses
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .engine import ExperimentConfig, ReplicationResult, run_replication
from .policy import ScenarioKind
from .psychodynamics import HazardParams

__all__ = [
    "EmpiricalCurve",
    "SearchSpace",
    "CandidateEval",
    "CalibrationResult",
    "default_empirical_target",
    "cumulative_dropout_by_year",
    "rmse",
    "apply_candidate",
    "calibrate",
    "write_calibration_report",
]

YEARS = 6
DEFAULT_TOLERANCE = 0.05


@dataclass(frozen=True)
class EmpiricalCurve:
    """Yearly cumulative dropout fractions for years 1..6."""

    values: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        if len(self.values) != YEARS:
            raise ValueError(f"curve must have {YEARS} values")
        prev = 0.0
        for v in self.values:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"curve value {v} outside [0, 1]")
            if v < prev:
                raise ValueError("curve must be non-decreasing")
            prev = v

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def default_empirical_target() -> EmpiricalCurve:
    """The default historical calibration target.

    Years 1 and 2 are the observed cumulative dropout values; years 3-6
    interpolate linearly across the reported 39-48% range.
    """
    return EmpiricalCurve((0.234, 0.328, 0.39, 0.42, 0.45, 0.48))


def cumulative_dropout_by_year(results: ReplicationResult | Sequence[ReplicationResult]) -> np.ndarray:
    """Fraction of the cohort dropped by the end of each academic year.

    Year k covers semesters 2k-1 and 2k; values are averaged over the given
    replications.  Requires a horizon of at least 12 semesters.
    """
    reps = [results] if isinstance(results, ReplicationResult) else list(results)
    if not reps:
        raise ValueError("no replication results given")
    curves = []
    for rep in reps:
        if len(rep.semester_stats) < 2 * YEARS:
            raise ValueError(f"horizon {len(rep.semester_stats)} < {2 * YEARS} semesters; cannot compute yearly curve")
        counts = np.zeros(YEARS)
        for record in rep.records:
            if record.dropout_semester is not None and record.dropout_semester <= 2 * YEARS:
                counts[(record.dropout_semester + 1) // 2 - 1] += 1
        curves.append(np.cumsum(counts) / rep.cohort_size)
    return np.mean(curves, axis=0)


def rmse(sim: Iterable[float], target: Iterable[float]) -> float:
    """Root-mean-square error between two equal-length vectors."""
    a = np.asarray(list(sim), dtype=float)
    b = np.asarray(list(target), dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class SearchSpace:
    """Grid of candidate parameter values for the historical-scenario fit.

    Axis order is the lexicographic tie-break order of the search: earlier
    candidates win RMSE ties.
    """

    alpha0: tuple[float, ...]
    alpha1: tuple[float, ...]
    alpha2: tuple[float, ...]
    reg_success_scale: tuple[float, ...]
    stress_fail_gain: tuple[float, ...]
    debt_stress_per_item: tuple[float, ...]
    calibration_replications: int = 5

    AXES = ("alpha0", "alpha1", "alpha2", "reg_success_scale", "stress_fail_gain", "debt_stress_per_item")

    def __post_init__(self):
        for name in self.AXES:
            values = getattr(self, name)
            if not values:
                raise ValueError(f"empty search axis {name}")
        if any(v <= 0 for v in self.alpha1):
            raise ValueError("alpha1 candidates must be > 0")
        if any(v >= 0 for v in self.alpha2):
            raise ValueError("alpha2 candidates must be < 0")
        if self.calibration_replications < 1:
            raise ValueError("calibration_replications must be >= 1")

    @classmethod
    def from_ranges(cls, ranges: dict[str, tuple[float, float, int]], calibration_replications: int = 5) -> "SearchSpace":
        """Build linspace axes from {name: (lo, hi, n_points)}."""
        axes = {}
        for name in cls.AXES:
            lo, hi, n = ranges[name]
            axes[name] = tuple(float(x) for x in np.linspace(lo, hi, int(n)))
        return cls(calibration_replications=calibration_replications, **axes)

    def size(self) -> int:
        n = 1
        for name in self.AXES:
            n *= len(getattr(self, name))
        return n

    def candidates(self) -> Iterator[dict[str, float]]:
        axes = [getattr(self, name) for name in self.AXES]
        for combo in itertools.product(*axes):
            yield dict(zip(self.AXES, combo))


@dataclass(frozen=True)
class CandidateEval:
    params: dict[str, float]
    rmse: float
    curve: tuple[float, ...]
    replications_used: int
    pruned: bool


@dataclass(frozen=True)
class CalibrationResult:
    params: dict[str, float]
    achieved_rmse: float
    curve: tuple[float, ...]
    target: tuple[float, ...]
    tolerance: float
    accepted: bool
    evaluations: tuple[CandidateEval, ...]


def apply_candidate(cfg: ExperimentConfig, params: dict[str, float]) -> ExperimentConfig:
    """Return a config with one candidate's parameters substituted.

    The hazard coefficients and psych constants are global (shared by every
    scenario, which is what keeps them frozen across counterfactuals);
    ``reg_success_scale`` only has meaning on the historical policy.
    """
    hazard = HazardParams(alpha0=params["alpha0"], alpha1=params["alpha1"], alpha2=params["alpha2"])
    psych = dataclasses.replace(
        cfg.psych,
        stress_fail_gain=params["stress_fail_gain"],
        debt_stress_per_item=params["debt_stress_per_item"],
    )
    scenarios = tuple(
        dataclasses.replace(p, reg_success_scale=params["reg_success_scale"]) for p in cfg.scenarios
    )
    return dataclasses.replace(cfg, hazard=hazard, psych=psych, scenarios=scenarios)


def _scenario_a_config(cfg: ExperimentConfig, replications: int) -> ExperimentConfig:
    policy_a = cfg.scenario(ScenarioKind.A_HISTORICAL)
    return dataclasses.replace(cfg, scenarios=(policy_a,), replications_per_scenario=replications)


def _candidate_curve(cfg: ExperimentConfig, replications: Iterable[int]) -> list[ReplicationResult]:
    policy_a = cfg.scenario(ScenarioKind.A_HISTORICAL)
    return [run_replication(cfg, policy_a, rep) for rep in replications]


def calibrate(
    space: SearchSpace,
    cfg: ExperimentConfig,
    target: EmpiricalCurve,
    tolerance: float = DEFAULT_TOLERANCE,
    early_exit: bool = True,
    prune_margin: float = 0.02,
) -> CalibrationResult:
    """Grid-search the historical scenario for the minimum-RMSE parameter set.

    Candidates are evaluated over ``space.calibration_replications``
    replications of the historical scenario.  With ``early_exit`` a candidate
    whose single-replication RMSE exceeds the best full RMSE so far by more
    than ``prune_margin`` skips its remaining replications.  Evaluation order
    is deterministic, so the search is fully reproducible.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    cfg.validate()
    if space.size() == 0:
        raise ValueError("empty search space")

    target_arr = target.as_array()
    reps = space.calibration_replications
    best: tuple[float, dict[str, float], np.ndarray] | None = None
    evaluations: list[CandidateEval] = []

    for params in space.candidates():
        candidate_cfg = _scenario_a_config(apply_candidate(cfg, params), reps)
        first = _candidate_curve(candidate_cfg, [0])
        curve = cumulative_dropout_by_year(first)
        screen_rmse = rmse(curve, target_arr)
        if early_exit and best is not None and reps > 1 and screen_rmse > best[0] + prune_margin:
            evaluations.append(
                CandidateEval(params=params, rmse=screen_rmse, curve=tuple(curve), replications_used=1, pruned=True)
            )
            continue
        if reps > 1:
            rest = _candidate_curve(candidate_cfg, range(1, reps))
            curve = cumulative_dropout_by_year(first + rest)
        full_rmse = rmse(curve, target_arr)
        evaluations.append(
            CandidateEval(params=params, rmse=full_rmse, curve=tuple(curve), replications_used=reps, pruned=False)
        )
        if best is None or full_rmse < best[0]:
            best = (full_rmse, params, curve)

    assert best is not None
    achieved, params, curve = best
    return CalibrationResult(
        params=params,
        achieved_rmse=achieved,
        curve=tuple(float(v) for v in curve),
        target=tuple(float(v) for v in target_arr),
        tolerance=tolerance,
        accepted=achieved <= tolerance,
        evaluations=tuple(evaluations),
    )


def write_calibration_report(result: CalibrationResult, path: Path) -> None:
    payload = {
        "winner": result.params,
        "achieved_rmse": result.achieved_rmse,
        "tolerance": result.tolerance,
        "accepted": result.accepted,
        "simulated_curve": list(result.curve),
        "target_curve": list(result.target),
        "n_candidates": len(result.evaluations),
        "n_pruned": sum(1 for e in result.evaluations if e.pruned),
        "evaluations": [
            {
                "params": e.params,
                "rmse": e.rmse,
                "curve": list(e.curve),
                "replications_used": e.replications_used,
                "pruned": e.pruned,
            }
            for e in result.evaluations
        ],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
