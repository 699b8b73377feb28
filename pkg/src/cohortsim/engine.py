"""Semester loop, replication harness, and experiment outputs.

One replication simulates a full cohort through the semester loop under one
scenario.  All stochastic draws come from streams addressed by (scenario,
replication, agent, semester, purpose), so parallel and sequential execution
produce byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .curriculum import CurriculumGraph, available_courses
from .policy import (
    AttemptOutcome,
    AttemptResult,
    ScenarioKind,
    ScenarioPolicy,
    allocate_remedial,
    attempt_course_promotion,
    attempt_course_regularity,
    collect_remedial_pool,
    effective_friction,
    resolve_finals_debt,
)
from .population import (
    AgentState,
    AgentStatus,
    Archetype,
    ArchetypeTable,
    DropoutCause,
    sample_cohort,
)
from .psychodynamics import (
    EventKind,
    HazardParams,
    PsychUpdateParams,
    SemesterEvent,
    apply_event,
    dropout_hazard,
    sample_dropout,
)
from .rng import Purpose, StreamKit, derive_seed

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "AgentRecord",
    "SemesterAggregate",
    "ReplicationResult",
    "ExperimentResult",
    "ReplicationRun",
    "step_semester",
    "run_replication",
    "run_experiment",
    "classify_dropout_cause",
    "write_agent_outcomes",
    "write_config_effective",
    "AGENT_CSV_COLUMNS",
]

AGENT_CSV_COLUMNS = (
    "scenario,replication,agent_id,archetype_id,resilience,status,dropout_semester,"
    "dropout_cause,final_stress,final_belonging,final_debt,killer_failures,"
    "remedial_acceptances,courses_passed"
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run the full experiment deterministically."""

    curriculum: CurriculumGraph
    archetypes: ArchetypeTable
    hazard: HazardParams
    psych: PsychUpdateParams
    scenarios: tuple[ScenarioPolicy, ...]
    cohort_size: int = 1343
    horizon_semesters: int = 12
    replications_per_scenario: int = 20
    master_seed: int = 0
    debt_cause_threshold: int = 3

    def validate(self) -> None:
        if self.cohort_size <= 0:
            raise ConfigError(f"cohort_size must be > 0, got {self.cohort_size}")
        if self.horizon_semesters < 1:
            raise ConfigError(f"horizon_semesters must be >= 1, got {self.horizon_semesters}")
        if self.replications_per_scenario < 1:
            raise ConfigError("replications_per_scenario must be >= 1")
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        kinds = [p.kind for p in self.scenarios]
        if len(set(kinds)) != len(kinds):
            raise ConfigError("duplicate scenario kinds")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")

    def scenario(self, kind: ScenarioKind) -> ScenarioPolicy:
        for p in self.scenarios:
            if p.kind is kind:
                return p
        raise KeyError(kind)

    def cohort_seed(self, kind: ScenarioKind, replication: int) -> int:
        return derive_seed(self.master_seed, kind.code, replication)


@dataclass(slots=True, frozen=True)
class AgentRecord:
    """Flat end-of-run snapshot of one agent (one CSV row, minus scenario/rep)."""

    agent_id: int
    archetype_id: int
    resilience: str
    status: str
    dropout_semester: int | None
    dropout_cause: str | None
    final_stress: float
    final_belonging: float
    final_debt: int
    killer_failures: int
    remedial_acceptances: int
    courses_passed: int


@dataclass(slots=True, frozen=True)
class SemesterAggregate:
    semester: int
    active: int
    dropped_cum: int
    graduated_cum: int
    mean_stress_active: float | None
    mean_belonging_active: float | None


@dataclass(frozen=True)
class ReplicationResult:
    scenario: ScenarioKind
    replication: int
    cohort_size: int
    records: tuple[AgentRecord, ...]
    semester_stats: tuple[SemesterAggregate, ...]


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    replications: dict[ScenarioKind, tuple[ReplicationResult, ...]]

    @property
    def total_records(self) -> int:
        return sum(len(r.records) for reps in self.replications.values() for r in reps)


def classify_dropout_cause(agent: AgentState, debt_cause_threshold: int = 3) -> DropoutCause:
    """Attribute a dropout: debt burden first, then academic failure, else other."""
    if agent.status is not AgentStatus.DROPPED:
        raise ValueError(f"agent {agent.agent_id} has not dropped out")
    if len(agent.finals_debt) >= debt_cause_threshold:
        return DropoutCause.NORMATIVE
    if agent.transcript.total_failed_attempts() >= 1:
        return DropoutCause.ACADEMIC
    return DropoutCause.OTHER


class ReplicationRun:
    """Mutable world state of one replication in progress."""

    def __init__(self, cfg: ExperimentConfig, policy: ScenarioPolicy, replication: int):
        cfg.validate()
        self.cfg = cfg
        self.policy = policy
        self.replication = replication
        self.agents: list[AgentState] = sample_cohort(
            cfg.archetypes, cfg.cohort_size, cfg.cohort_seed(policy.kind, replication)
        )
        self.archetypes: dict[int, Archetype] = {a.id: a for a in cfg.archetypes}
        self.kit = StreamKit(cfg.master_seed, policy.kind.code, replication)
        representative = cfg.archetypes.mean_ability()
        self.eff_friction = {
            c.id: effective_friction(c, policy, representative) for c in cfg.curriculum.plan_order
        }
        self.semester_stats: list[SemesterAggregate] = []

    def counts(self) -> tuple[int, int, int]:
        active = dropped = graduated = 0
        for a in self.agents:
            if a.status is AgentStatus.ACTIVE:
                active += 1
            elif a.status is AgentStatus.DROPPED:
                dropped += 1
            else:
                graduated += 1
        return active, dropped, graduated


def step_semester(run: ReplicationRun, semester: int) -> dict[int, list[SemesterEvent]]:
    """Advance every active agent one semester; returns each agent's event list.

    Per agent, in ascending id: enrolment availability, course attempts,
    debt resolution and debt tick (historical regime), psych updates,
    graduation check, then the dropout hazard.  Under the safety net the
    remedial pool is allocated as an end-of-semester barrier over agents
    still active after the hazard step.
    """
    cfg, policy, kit = run.cfg, run.policy, run.kit
    graph = cfg.curriculum
    regularity = policy.kind is ScenarioKind.A_HISTORICAL
    safety_net = policy.kind is ScenarioKind.C_SAFETY_NET
    events_by_agent: dict[int, list[SemesterEvent]] = {}
    near_pass_outcomes: list[tuple[AgentState, AttemptOutcome]] = []

    for agent in run.agents:
        if agent.status is not AgentStatus.ACTIVE:
            continue
        if not regularity and agent.finals_debt:
            raise RuntimeError(f"agent {agent.agent_id}: finals debt under {policy.kind.value}")
        archetype = run.archetypes[agent.archetype_id]
        events: list[SemesterEvent] = []
        available = available_courses(graph, agent.transcript, policy.kind, archetype.workload_cap)
        if available:
            attempt_rng = kit.stream(agent.agent_id, semester, Purpose.ATTEMPTS)
            for cid in available:
                course = graph.course(cid)
                if regularity:
                    outcome = attempt_course_regularity(agent, archetype, course, policy, attempt_rng, semester)
                    kind = EventKind.REGULARIZE if outcome.result is AttemptResult.REGULARIZED else EventKind.FAIL
                    events.append(SemesterEvent(kind, cid, course.friction))
                else:
                    eff = run.eff_friction[cid]
                    outcome = attempt_course_promotion(agent, archetype, course, policy, attempt_rng, eff)
                    kind = EventKind.PASS if outcome.result is AttemptResult.PASSED else EventKind.FAIL
                    events.append(SemesterEvent(kind, cid, eff))
                    if outcome.near_pass:
                        near_pass_outcomes.append((agent, outcome))
        if regularity:
            debt_rng = kit.stream(agent.agent_id, semester, Purpose.DEBT)
            resolved = resolve_finals_debt(agent, archetype, graph, policy, debt_rng, semester)
            for cid in resolved:
                events.append(SemesterEvent(EventKind.PASS, cid, graph.course(cid).friction))
            events.append(SemesterEvent(EventKind.DEBT_TICK))
        for event in events:
            apply_event(agent, event, archetype, cfg.psych)
        events_by_agent[agent.agent_id] = events

        if len(agent.transcript.passed) == graph.course_count:
            agent.status = AgentStatus.GRADUATED
            continue
        hazard = dropout_hazard(agent.stress, agent.belonging, cfg.hazard)
        if sample_dropout(hazard, kit.stream(agent.agent_id, semester, Purpose.DROPOUT)):
            agent.status = AgentStatus.DROPPED
            agent.dropout_semester = semester
            agent.dropout_cause = classify_dropout_cause(agent, cfg.debt_cause_threshold)

    if safety_net:
        survivors = [(a, o) for a, o in near_pass_outcomes if a.status is AgentStatus.ACTIVE]
        pool = collect_remedial_pool(survivors, graph, policy)
        active_count = sum(1 for a in run.agents if a.status is AgentStatus.ACTIVE)
        decisions = allocate_remedial(pool, active_count, policy, run.archetypes)
        for d in decisions:
            if d.accepted:
                events_by_agent.setdefault(d.agent_id, []).extend(
                    (
                        SemesterEvent(EventKind.REMEDIAL_ACCEPT, d.course_id),
                        SemesterEvent(EventKind.REMEDIAL_SUCCESS, d.course_id),
                    )
                )

    active, dropped, graduated = run.counts()
    if active + dropped + graduated != cfg.cohort_size:
        raise RuntimeError(
            f"conservation violated at semester {semester}: {active}+{dropped}+{graduated} != {cfg.cohort_size}"
        )
    stress_sum = belonging_sum = 0.0
    for a in run.agents:
        if a.status is AgentStatus.ACTIVE:
            stress_sum += a.stress
            belonging_sum += a.belonging
    run.semester_stats.append(
        SemesterAggregate(
            semester=semester,
            active=active,
            dropped_cum=dropped,
            graduated_cum=graduated,
            mean_stress_active=(stress_sum / active) if active else None,
            mean_belonging_active=(belonging_sum / active) if active else None,
        )
    )
    return events_by_agent


def _agent_record(agent: AgentState, archetype: Archetype) -> AgentRecord:
    return AgentRecord(
        agent_id=agent.agent_id,
        archetype_id=agent.archetype_id,
        resilience=archetype.resilience.value,
        status=agent.status.value,
        dropout_semester=agent.dropout_semester,
        dropout_cause=agent.dropout_cause.value if agent.dropout_cause else None,
        final_stress=agent.stress,
        final_belonging=agent.belonging,
        final_debt=len(agent.finals_debt),
        killer_failures=agent.killer_failures,
        remedial_acceptances=agent.remedial_acceptances,
        courses_passed=len(agent.transcript.passed),
    )


def run_replication(cfg: ExperimentConfig, policy: ScenarioPolicy, replication: int) -> ReplicationResult:
    """Simulate one independently seeded cohort under one scenario."""
    run = ReplicationRun(cfg, policy, replication)
    for semester in range(1, cfg.horizon_semesters + 1):
        step_semester(run, semester)
    records = tuple(_agent_record(a, run.archetypes[a.archetype_id]) for a in run.agents)
    return ReplicationResult(
        scenario=policy.kind,
        replication=replication,
        cohort_size=cfg.cohort_size,
        records=records,
        semester_stats=tuple(run.semester_stats),
    )


def _run_task(args: tuple[ExperimentConfig, ScenarioPolicy, int]) -> ReplicationResult:
    cfg, policy, replication = args
    return run_replication(cfg, policy, replication)


def run_experiment(cfg: ExperimentConfig, output_dir: str | Path | None = None, jobs: int = 1) -> ExperimentResult:
    """Run every (scenario, replication) pair; optionally write all output files.

    ``jobs > 1`` distributes replications over processes; the addressed RNG
    makes the result identical to sequential execution.
    """
    cfg.validate()
    tasks = [(cfg, policy, rep) for policy in cfg.scenarios for rep in range(cfg.replications_per_scenario)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        results = [_run_task(t) for t in tasks]

    by_scenario: dict[ScenarioKind, list[ReplicationResult]] = {p.kind: [] for p in cfg.scenarios}
    for res in results:
        by_scenario[res.scenario].append(res)
    for kind in by_scenario:
        by_scenario[kind].sort(key=lambda r: r.replication)
    experiment = ExperimentResult(
        config=cfg,
        replications={k: tuple(v) for k, v in by_scenario.items()},
    )
    if output_dir is not None:
        write_outputs(experiment, Path(output_dir))
    return experiment


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_agent_outcomes(experiment: ExperimentResult, path: Path) -> None:
    """Write one row per (scenario, replication, agent), fixed 6-decimal reals."""
    lines = [AGENT_CSV_COLUMNS]
    for kind, reps in experiment.replications.items():
        for rep in reps:
            for r in rep.records:
                lines.append(
                    ",".join(
                        (
                            kind.value,
                            str(rep.replication),
                            str(r.agent_id),
                            str(r.archetype_id),
                            r.resilience,
                            r.status,
                            "" if r.dropout_semester is None else str(r.dropout_semester),
                            r.dropout_cause or "",
                            _fmt(r.final_stress),
                            _fmt(r.final_belonging),
                            str(r.final_debt),
                            str(r.killer_failures),
                            str(r.remedial_acceptances),
                            str(r.courses_passed),
                        )
                    )
                )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def config_effective_dict(cfg: ExperimentConfig) -> dict:
    """The fully resolved configuration, including derived seeds."""
    return {
        "cohort_size": cfg.cohort_size,
        "horizon_semesters": cfg.horizon_semesters,
        "replications_per_scenario": cfg.replications_per_scenario,
        "master_seed": cfg.master_seed,
        "debt_cause_threshold": cfg.debt_cause_threshold,
        "n_scenarios": len(cfg.scenarios),
        "expected_agent_rows": cfg.cohort_size * len(cfg.scenarios) * cfg.replications_per_scenario,
        "hazard": dataclasses.asdict(cfg.hazard),
        "psych": dataclasses.asdict(cfg.psych),
        "scenarios": {
            p.kind.value: {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in dataclasses.asdict(p).items()
                if k != "kind"
            }
            for p in cfg.scenarios
        },
        "representative_ability": cfg.archetypes.mean_ability(),
        "derived_cohort_seeds": {
            p.kind.value: [cfg.cohort_seed(p.kind, rep) for rep in range(cfg.replications_per_scenario)]
            for p in cfg.scenarios
        },
        "curriculum": {
            "courses": [
                {
                    "id": c.id,
                    "name": c.name,
                    "nominal_semester": c.nominal_semester,
                    "friction": c.friction,
                    "is_bottleneck": c.is_bottleneck,
                    "prerequisites": sorted(c.prerequisites),
                }
                for c in cfg.curriculum.plan_order
            ]
        },
        "archetypes": {
            "archetypes": [
                {
                    "id": a.id,
                    "label": a.label,
                    "frequency": a.frequency,
                    "ability": a.ability,
                    "planning_horizon": a.planning_horizon.value,
                    "stress_reactivity": a.stress_reactivity,
                    "belonging_sensitivity": a.belonging_sensitivity,
                    "resilience": a.resilience.value,
                    "init_stress": {"mean": a.init_stress_mean, "std": a.init_stress_std},
                    "init_belonging": {"mean": a.init_belonging_mean, "std": a.init_belonging_std},
                }
                for a in cfg.archetypes
            ]
        },
    }


def write_config_effective(cfg: ExperimentConfig, path: Path) -> None:
    path.write_text(json.dumps(config_effective_dict(cfg), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_outputs(experiment: ExperimentResult, output_dir: Path) -> None:
    """Write the full output-file set for a run directory."""
    from . import analysis  # deferred: analysis imports engine types

    output_dir.mkdir(parents=True, exist_ok=True)
    write_config_effective(experiment.config, output_dir / "config_effective.json")
    write_agent_outcomes(experiment, output_dir / "agent_outcomes_all_runs.csv")
    analysis.write_summary_csv(experiment.replications, output_dir / "policy_tradeoff_summary.csv")
    analysis.write_curves_csv(experiment.replications, output_dir / "dropout_curves.csv")
