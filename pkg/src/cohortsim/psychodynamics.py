"""Stress/belonging update rules and the logistic dropout hazard."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .population import AgentState, Archetype

__all__ = [
    "HazardParams",
    "PsychUpdateParams",
    "EventKind",
    "SemesterEvent",
    "apply_event",
    "dropout_hazard",
    "sample_dropout",
    "clamp01",
]


def clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


@dataclass(frozen=True)
class HazardParams:
    """Coefficients of the per-semester logistic dropout hazard.

    ``alpha1`` must be positive (stress raises risk) and ``alpha2`` negative
    (belonging protects).
    """

    alpha0: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if self.alpha1 <= 0:
            raise ValueError(f"alpha1 must be > 0, got {self.alpha1}")
        if self.alpha2 >= 0:
            raise ValueError(f"alpha2 must be < 0, got {self.alpha2}")


@dataclass(frozen=True)
class PsychUpdateParams:
    """Magnitudes of the per-event stress/belonging updates."""

    stress_fail_gain: float = 0.0
    stress_pass_relief: float = 0.0
    belonging_pass_gain: float = 0.0
    belonging_fail_loss: float = 0.0
    debt_stress_per_item: float = 0.0
    remedial_stress_cost: float = 0.0
    remedial_belonging_bonus: float = 0.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


class EventKind(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    REGULARIZE = "REGULARIZE"
    DEBT_TICK = "DEBT_TICK"
    REMEDIAL_ACCEPT = "REMEDIAL_ACCEPT"
    REMEDIAL_SUCCESS = "REMEDIAL_SUCCESS"


@dataclass(slots=True, frozen=True)
class SemesterEvent:
    """One psych-relevant occurrence within a semester."""

    kind: EventKind
    course_id: str | None = None
    friction: float = 0.0


def apply_event(agent: AgentState, event: SemesterEvent, archetype: Archetype, params: PsychUpdateParams) -> AgentState:
    """Apply one event's stress/belonging update in place; state stays in [0, 1].

    Failures hurt in proportion to course friction and the agent's stress
    reactivity; passes give mild relief and a belonging gain scaled by
    belonging sensitivity.  Regularization itself is psychologically neutral —
    its burden arrives through the per-semester debt tick.  The debt tick uses
    the agent's current (post-resolution) queue length.
    """
    kind = event.kind
    if kind is EventKind.FAIL:
        agent.stress = clamp01(agent.stress + params.stress_fail_gain * event.friction * archetype.stress_reactivity)
        agent.belonging = clamp01(agent.belonging - params.belonging_fail_loss * archetype.belonging_sensitivity)
    elif kind is EventKind.PASS:
        agent.stress = clamp01(agent.stress - params.stress_pass_relief)
        agent.belonging = clamp01(agent.belonging + params.belonging_pass_gain * archetype.belonging_sensitivity)
    elif kind is EventKind.DEBT_TICK:
        agent.stress = clamp01(agent.stress + params.debt_stress_per_item * len(agent.finals_debt))
    elif kind is EventKind.REMEDIAL_ACCEPT:
        agent.stress = clamp01(agent.stress + params.remedial_stress_cost)
    elif kind is EventKind.REMEDIAL_SUCCESS:
        agent.belonging = clamp01(agent.belonging + params.remedial_belonging_bonus)
    # REGULARIZE: no direct psych effect.
    return agent


def dropout_hazard(stress: float, belonging: float, h: HazardParams) -> float:
    """Per-semester dropout probability sigma(a0 + a1*stress + a2*belonging).

    Strictly inside (0, 1) for finite inputs; extreme logits that would round
    to 0 or 1 in double precision are nudged to the nearest representable
    interior value.
    """
    logit = h.alpha0 + h.alpha1 * stress + h.alpha2 * belonging
    if logit >= 0:
        p = 1.0 / (1.0 + math.exp(-logit))
    else:
        e = math.exp(logit)
        p = e / (1.0 + e)
    if p >= 1.0:
        return math.nextafter(1.0, 0.0)
    if p <= 0.0:
        return math.nextafter(0.0, 1.0)
    return p


def sample_dropout(hazard: float, rng: np.random.Generator) -> bool:
    """Bernoulli draw on the hazard from the given stream."""
    if not (0.0 <= hazard <= 1.0):
        raise ValueError(f"hazard must be in [0, 1], got {hazard}")
    return bool(rng.random() < hazard)
