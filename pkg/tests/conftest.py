import dataclasses

import pytest

from cohortsim.config import default_config
from cohortsim.curriculum import load_curriculum
from cohortsim.engine import ExperimentConfig
from cohortsim.policy import ScenarioKind, ScenarioPolicy
from cohortsim.population import (
    Archetype,
    ArchetypeTable,
    PlanningHorizon,
    Resilience,
)
from cohortsim.psychodynamics import HazardParams, PsychUpdateParams


def make_archetype(**overrides) -> Archetype:
    base = dict(
        id=1,
        label="test",
        frequency=1.0,
        ability=0.7,
        planning_horizon=PlanningHorizon.BALANCED,
        stress_reactivity=1.0,
        belonging_sensitivity=1.0,
        resilience=Resilience.MEDIUM,
        init_stress_mean=0.4,
        init_stress_std=0.1,
        init_belonging_mean=0.6,
        init_belonging_std=0.1,
    )
    base.update(overrides)
    return Archetype(**base)


def chain_curriculum(n: int = 2):
    """Courses C1 -> C2 -> ... -> Cn, one per semester, friction 0."""
    courses = []
    for i in range(1, n + 1):
        courses.append(
            {
                "id": f"C{i}",
                "name": f"Course {i}",
                "nominal_semester": i,
                "friction": 0.0,
                "is_bottleneck": i == 1,
                "prerequisites": [f"C{i-1}"] if i > 1 else [],
            }
        )
    return load_curriculum({"courses": courses})


def small_table(n_arch: int = 3) -> ArchetypeTable:
    resiliences = [Resilience.LOW, Resilience.MEDIUM, Resilience.HIGH]
    archetypes = [
        make_archetype(
            id=i + 1,
            frequency=1.0 / n_arch,
            ability=0.4 + 0.2 * i,
            resilience=resiliences[i % 3],
            stress_reactivity=1.5 - 0.3 * i,
        )
        for i in range(n_arch)
    ]
    return ArchetypeTable(archetypes)


def small_config(**overrides) -> ExperimentConfig:
    """A fast three-scenario config on the tiny chain curriculum."""
    base = dict(
        curriculum=chain_curriculum(4),
        archetypes=small_table(),
        hazard=HazardParams(alpha0=-3.0, alpha1=3.0, alpha2=-2.0),
        psych=PsychUpdateParams(
            stress_fail_gain=0.08,
            stress_pass_relief=0.03,
            belonging_pass_gain=0.04,
            belonging_fail_loss=0.03,
            debt_stress_per_item=0.02,
        ),
        scenarios=(
            ScenarioPolicy.historical(),
            ScenarioPolicy.direct_promotion(),
            ScenarioPolicy.safety_net(),
        ),
        cohort_size=40,
        horizon_semesters=12,
        replications_per_scenario=2,
        master_seed=123,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture(scope="session")
def default_bundle():
    return default_config()


@pytest.fixture(scope="session")
def default_experiment_config(default_bundle):
    return default_bundle.experiment


def replace_cfg(cfg, **kw):
    return dataclasses.replace(cfg, **kw)


@pytest.fixture
def scenario_a():
    return ScenarioPolicy.historical()


@pytest.fixture
def scenario_b():
    return ScenarioPolicy.direct_promotion()


@pytest.fixture
def scenario_c():
    return ScenarioPolicy.safety_net()


SCENARIO_KINDS = tuple(ScenarioKind)
