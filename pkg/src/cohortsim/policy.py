"""The three progression regimes and their course-attempt mechanics.

A_HISTORICAL: continuous assessment grants "regularity"; the course joins a
finals-debt queue that resolves probabilistically over later semesters, with a
soft time-to-live decaying old items' success odds.

B_DIRECT_PROMOTION: a course is fully passed or fully failed within its
semester.  Designated bottleneck courses get their effective friction solved
to hit a target failure rate at the cohort's representative ability;
non-bottleneck friction is moderately inflated.

C_SAFETY_NET: direct promotion plus a capacity-limited remedial term for
near-pass failures in bottleneck courses, prioritised by low resilience.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import ndtri

from .curriculum import Course, CurriculumGraph
from .population import AgentState, Archetype, DebtItem, Resilience
from .psychodynamics import clamp01

__all__ = [
    "ScenarioKind",
    "ScenarioPolicy",
    "AttemptResult",
    "AttemptOutcome",
    "RemedialDecision",
    "attempt_course_regularity",
    "resolve_finals_debt",
    "ttl_multiplier",
    "effective_friction",
    "attempt_course_promotion",
    "collect_remedial_pool",
    "allocate_remedial",
]

log = logging.getLogger(__name__)


class ScenarioKind(str, Enum):
    A_HISTORICAL = "A_HISTORICAL"
    B_DIRECT_PROMOTION = "B_DIRECT_PROMOTION"
    C_SAFETY_NET = "C_SAFETY_NET"

    @property
    def code(self) -> int:
        """Stable small integer for RNG stream addressing."""
        return ("A_HISTORICAL", "B_DIRECT_PROMOTION", "C_SAFETY_NET").index(self.value) + 1

    @property
    def short(self) -> str:
        return self.value[0]


@dataclass(frozen=True)
class ScenarioPolicy:
    """Complete rule set for one progression regime."""

    kind: ScenarioKind
    # Regularity regime (A)
    reg_success_scale: float = 1.0
    debt_resolution_base: float = 0.6
    ttl_age_threshold: int = 6
    ttl_success_decay: float = 0.5
    # Direct promotion (B, C)
    bottleneck_target_fail_rate: float = 0.90
    nonbottleneck_friction_multiplier: float = 1.2
    pass_threshold: float = 0.6
    score_noise_std: float = 0.15
    # Safety net (C)
    near_pass_band: tuple[float, float] = (0.5, 0.6)
    remedial_capacity_fraction: float = 0.30
    remedial_pass_prob_boost: float = 0.0   # reserved for a probabilistic remedial mode
    remedial_stress_cost: float = 0.05
    remedial_belonging_bonus: float = 0.08

    def __post_init__(self):
        low, high = self.near_pass_band
        if not (low < high <= self.pass_threshold):
            raise ValueError(f"near_pass_band {self.near_pass_band} must satisfy low < high <= pass threshold")
        if not (0.0 <= self.remedial_capacity_fraction <= 1.0):
            raise ValueError("remedial_capacity_fraction must be in [0, 1]")
        if self.nonbottleneck_friction_multiplier < 1.0:
            raise ValueError("nonbottleneck_friction_multiplier must be >= 1")
        if self.reg_success_scale <= 0:
            raise ValueError("reg_success_scale must be positive")

    @classmethod
    def historical(cls, **overrides) -> "ScenarioPolicy":
        return cls(kind=ScenarioKind.A_HISTORICAL, **overrides)

    @classmethod
    def direct_promotion(cls, **overrides) -> "ScenarioPolicy":
        return cls(kind=ScenarioKind.B_DIRECT_PROMOTION, **overrides)

    @classmethod
    def safety_net(cls, **overrides) -> "ScenarioPolicy":
        return cls(kind=ScenarioKind.C_SAFETY_NET, **overrides)


class AttemptResult(str, Enum):
    PASSED = "PASSED"
    REGULARIZED = "REGULARIZED"
    FAILED = "FAILED"


@dataclass(slots=True, frozen=True)
class AttemptOutcome:
    """Result of one course attempt in one semester."""

    course_id: str
    result: AttemptResult
    performance_score: float | None = None   # promotion regimes only
    near_pass: bool = False


@dataclass(frozen=True)
class RemedialDecision:
    agent_id: int
    course_id: str
    accepted: bool
    priority_class: Resilience


def attempt_course_regularity(
    agent: AgentState,
    archetype: Archetype,
    course: Course,
    policy: ScenarioPolicy,
    rng: np.random.Generator,
    current_semester: int,
) -> AttemptOutcome:
    """One regularization attempt under the historical regime.

    Success probability is ``reg_success_scale * ability * (1 - friction)``,
    clamped to [0, 1].  Success regularizes the course and queues a debt item;
    failure counts a failed attempt.
    """
    p = clamp01(policy.reg_success_scale * archetype.ability * (1.0 - course.friction))
    if rng.random() < p:
        agent.transcript.regularized.add(course.id)
        agent.finals_debt.append(DebtItem(course_id=course.id, semester_incurred=current_semester, age=0))
        return AttemptOutcome(course_id=course.id, result=AttemptResult.REGULARIZED)
    t = agent.transcript
    t.failed_attempts[course.id] = t.failed_attempts.get(course.id, 0) + 1
    return AttemptOutcome(course_id=course.id, result=AttemptResult.FAILED)


def ttl_multiplier(age: int, policy: ScenarioPolicy) -> float:
    """Soft time-to-live: full success odds up to the age threshold, then decay."""
    if age < 0:
        raise ValueError("age must be >= 0")
    if age <= policy.ttl_age_threshold:
        return 1.0
    return (1.0 - policy.ttl_success_decay) ** (age - policy.ttl_age_threshold)


def resolve_finals_debt(
    agent: AgentState,
    archetype: Archetype,
    graph: CurriculumGraph,
    policy: ScenarioPolicy,
    rng: np.random.Generator,
    current_semester: int,
) -> list[str]:
    """Attempt every queued final once; return the course ids that resolved.

    Each item resolves with probability
    ``debt_resolution_base * ability * (1 - friction) * ttl_multiplier(age)``.
    Resolved courses move to passed and leave both the queue and the
    regularized set; survivors age by one semester.
    """
    if not agent.finals_debt:
        return []
    resolved: list[str] = []
    remaining: list[DebtItem] = []
    for item in agent.finals_debt:
        item.age = current_semester - item.semester_incurred
        friction = graph.course(item.course_id).friction
        p = clamp01(
            policy.debt_resolution_base
            * archetype.ability
            * (1.0 - friction)
            * ttl_multiplier(item.age, policy)
        )
        if rng.random() < p:
            agent.transcript.passed.add(item.course_id)
            agent.transcript.regularized.discard(item.course_id)
            resolved.append(item.course_id)
        else:
            item.age += 1
            remaining.append(item)
    agent.finals_debt = remaining
    return resolved


def effective_friction(course: Course, policy: ScenarioPolicy, representative_ability: float) -> float:
    """Scenario-adjusted friction for a course.

    Unchanged under the historical regime.  Under direct promotion,
    bottleneck friction is solved so that the pass probability at the
    representative ability equals ``1 - bottleneck_target_fail_rate`` given
    the latent-score model; non-bottleneck friction is multiplied by
    ``nonbottleneck_friction_multiplier``.  Infeasible targets clamp to [0, 1]
    with a warning in the run log.
    """
    if not (0.0 < representative_ability < 1.0):
        raise ValueError("representative_ability must be in (0, 1)")
    if policy.kind is ScenarioKind.A_HISTORICAL:
        return course.friction
    if not course.is_bottleneck:
        inflated = course.friction * policy.nonbottleneck_friction_multiplier
        if inflated > 1.0:
            log.warning("course %s: inflated friction %.4f clamped to 1.0", course.id, inflated)
        return clamp01(inflated)
    sigma = policy.score_noise_std
    target = policy.bottleneck_target_fail_rate
    if sigma == 0.0:
        if target not in (0.0, 1.0):
            log.warning(
                "course %s: fail-rate target %.3f unreachable with zero score noise; clamping",
                course.id,
                target,
            )
        mu = policy.pass_threshold if target < 1.0 else 1.0 + policy.pass_threshold
    else:
        mu = policy.pass_threshold - sigma * float(ndtri(target))
    friction = 1.0 - mu / representative_ability
    if not (0.0 <= friction <= 1.0):
        log.warning(
            "course %s: required friction %.4f outside [0, 1] for fail-rate target %.3f; clamping",
            course.id,
            friction,
            target,
        )
    return clamp01(friction)


def attempt_course_promotion(
    agent: AgentState,
    archetype: Archetype,
    course: Course,
    policy: ScenarioPolicy,
    rng: np.random.Generator,
    eff_friction: float | None = None,
) -> AttemptOutcome:
    """One pass/fail attempt under a direct-promotion regime.

    The latent performance score is ``clamp(ability * (1 - friction) + noise)``
    with Gaussian noise; the course is passed at or above the threshold.  A
    failure lands in the near-pass band on a bottleneck course (safety-net
    scenario only) is flagged as a remedial candidate.
    """
    if eff_friction is None:
        eff_friction = effective_friction(course, policy, archetype.ability)
    mu = archetype.ability * (1.0 - eff_friction)
    score = clamp01(mu + float(rng.normal(0.0, policy.score_noise_std)) if policy.score_noise_std > 0 else mu)
    if score >= policy.pass_threshold:
        agent.transcript.passed.add(course.id)
        return AttemptOutcome(course_id=course.id, result=AttemptResult.PASSED, performance_score=score)
    near = (
        policy.kind is ScenarioKind.C_SAFETY_NET
        and course.is_bottleneck
        and policy.near_pass_band[0] <= score < policy.near_pass_band[1]
    )
    t = agent.transcript
    t.failed_attempts[course.id] = t.failed_attempts.get(course.id, 0) + 1
    if course.is_bottleneck:
        agent.killer_failures += 1
    return AttemptOutcome(course_id=course.id, result=AttemptResult.FAILED, performance_score=score, near_pass=near)


def collect_remedial_pool(
    outcomes: list[tuple[AgentState, AttemptOutcome]],
    graph: CurriculumGraph,
    policy: ScenarioPolicy,
) -> list[tuple[AgentState, AttemptOutcome]]:
    """Near-pass failures on bottleneck courses from the semester just ended."""
    if policy.kind is not ScenarioKind.C_SAFETY_NET:
        raise ValueError("remedial pool only exists under the safety-net scenario")
    return [
        (agent, outcome)
        for agent, outcome in outcomes
        if outcome.near_pass and graph.course(outcome.course_id).is_bottleneck
    ]


def remedial_capacity(active_count: int, policy: ScenarioPolicy) -> int:
    """Seats per semester: the annual capacity fraction split over two terms."""
    return int(math.floor(policy.remedial_capacity_fraction * active_count / 2.0))


def allocate_remedial(
    pool: list[tuple[AgentState, AttemptOutcome]],
    active_count: int,
    policy: ScenarioPolicy,
    archetypes: dict[int, Archetype],
) -> list[RemedialDecision]:
    """Fill remedial seats by priority and apply the effects of acceptance.

    Order: resilience LOW, then MEDIUM, then HIGH; within a class by
    descending performance score, ties by ascending agent id.  Accepted
    candidates get the course marked passed, a stress cost and a belonging
    bonus; rejected candidates keep the failure.
    """
    if active_count < 0:
        raise ValueError("active_count must be >= 0")
    capacity = remedial_capacity(active_count, policy)
    ranked = sorted(
        pool,
        key=lambda pair: (
            archetypes[pair[0].archetype_id].resilience.rank,
            -(pair[1].performance_score or 0.0),
            pair[0].agent_id,
        ),
    )
    decisions: list[RemedialDecision] = []
    for i, (agent, outcome) in enumerate(ranked):
        accepted = i < capacity
        if accepted:
            agent.transcript.passed.add(outcome.course_id)
            agent.transcript.regularized.discard(outcome.course_id)
            agent.remedial_acceptances += 1
            agent.stress = clamp01(agent.stress + policy.remedial_stress_cost)
            agent.belonging = clamp01(agent.belonging + policy.remedial_belonging_bonus)
        decisions.append(
            RemedialDecision(
                agent_id=agent.agent_id,
                course_id=outcome.course_id,
                accepted=accepted,
                priority_class=archetypes[agent.archetype_id].resilience,
            )
        )
    return decisions
