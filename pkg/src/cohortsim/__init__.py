"""cohortsim: Monte Carlo agent-based simulation of student progression policies.

A cohort of synthetic students moves through a prerequisite-constrained
curriculum under one of three progression regimes (historical regularity with
finals debt, direct promotion, direct promotion with a remedial safety net),
with stress/belonging dynamics driving a logistic dropout hazard.  The
historical scenario is calibrated to an empirical cumulative-dropout curve;
the other regimes are counterfactuals sharing every calibrated parameter.
"""

from .analysis import (
    AuditReport,
    ScenarioSummary,
    TrajectorySeries,
    audit,
    equity_gap,
    km_dropout_curve,
    psychosocial_trajectories,
    summarize_scenario,
)
from .calibration import (
    CalibrationResult,
    EmpiricalCurve,
    SearchSpace,
    calibrate,
    cumulative_dropout_by_year,
    default_empirical_target,
    rmse,
)
from .config import ConfigBundle, default_config, default_config_path, load_config
from .curriculum import (
    Course,
    CurriculumGraph,
    GeneratorConfig,
    Transcript,
    available_courses,
    generate_synthetic_curriculum,
    load_curriculum,
    validate_graph,
)
from .engine import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    ReplicationResult,
    classify_dropout_cause,
    run_experiment,
    run_replication,
    step_semester,
)
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
    ttl_multiplier,
)
from .population import (
    AgentState,
    AgentStatus,
    Archetype,
    ArchetypeTable,
    DropoutCause,
    Resilience,
    default_archetype_table,
    init_psych_state,
    load_archetypes,
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

__version__ = "0.1.0"
