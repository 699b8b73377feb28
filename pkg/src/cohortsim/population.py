"""Psycho-academic archetypes and reproducible synthetic cohort sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .curriculum import Transcript
from .rng import Purpose, StreamKit

__all__ = [
    "PlanningHorizon",
    "Resilience",
    "AgentStatus",
    "DropoutCause",
    "Archetype",
    "ArchetypeTable",
    "ArchetypeTableError",
    "DebtItem",
    "AgentState",
    "load_archetypes",
    "default_archetype_table",
    "sample_cohort",
    "init_psych_state",
]

FREQUENCY_TOLERANCE = 1e-9
RESAMPLE_ATTEMPTS = 100


class PlanningHorizon(str, Enum):
    OVERLOADER = "OVERLOADER"
    BALANCED = "BALANCED"
    CONSERVATIVE = "CONSERVATIVE"


# Courses an agent will attempt per semester, by planning style.
WORKLOAD_CAPS = {
    PlanningHorizon.OVERLOADER: 6,
    PlanningHorizon.BALANCED: 5,
    PlanningHorizon.CONSERVATIVE: 4,
}


class Resilience(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"

    @property
    def rank(self) -> int:
        """LOW < MEDIUM < HIGH; lower rank means earlier remedial priority."""
        return ("LOW", "MEDIUM", "HIGH").index(self.value)


class AgentStatus(str, Enum):
    ACTIVE = "ACTIVE"
    DROPPED = "DROPPED"
    GRADUATED = "GRADUATED"


class DropoutCause(str, Enum):
    NORMATIVE = "NORMATIVE"
    ACADEMIC = "ACADEMIC"
    OTHER = "OTHER"


class ArchetypeTableError(ValueError):
    """Raised for malformed or inconsistent archetype tables."""


@dataclass(frozen=True)
class Archetype:
    """Static psycho-academic profile assigned to an agent at entry."""

    id: int
    label: str
    frequency: float
    ability: float
    planning_horizon: PlanningHorizon
    stress_reactivity: float
    belonging_sensitivity: float
    resilience: Resilience
    init_stress_mean: float
    init_stress_std: float
    init_belonging_mean: float
    init_belonging_std: float

    @property
    def workload_cap(self) -> int:
        return WORKLOAD_CAPS[self.planning_horizon]


class ArchetypeTable:
    """Validated, immutable collection of archetypes."""

    def __init__(self, archetypes: list[Archetype]):
        if not archetypes:
            raise ArchetypeTableError("archetype table is empty")
        total = sum(a.frequency for a in archetypes)
        if abs(total - 1.0) > FREQUENCY_TOLERANCE:
            raise ArchetypeTableError(f"archetype frequencies sum to {total!r}, not 1")
        ids = [a.id for a in archetypes]
        if len(set(ids)) != len(ids):
            raise ArchetypeTableError("duplicate archetype ids")
        for a in archetypes:
            if not (0.0 < a.ability < 1.0):
                raise ArchetypeTableError(f"archetype {a.id}: ability {a.ability} not strictly inside (0, 1)")
            if a.frequency < 0:
                raise ArchetypeTableError(f"archetype {a.id}: negative frequency")
            if a.stress_reactivity <= 0 or a.belonging_sensitivity <= 0:
                raise ArchetypeTableError(f"archetype {a.id}: reactivity/sensitivity must be positive")
        self._archetypes = tuple(sorted(archetypes, key=lambda a: a.id))
        self._by_id = {a.id: a for a in self._archetypes}
        self._cum_freq = np.cumsum([a.frequency for a in self._archetypes])
        self._cum_freq[-1] = 1.0  # guard against float drift in searchsorted

    def __iter__(self):
        return iter(self._archetypes)

    def __len__(self) -> int:
        return len(self._archetypes)

    def __getitem__(self, archetype_id: int) -> Archetype:
        return self._by_id[archetype_id]

    @property
    def archetypes(self) -> tuple[Archetype, ...]:
        return self._archetypes

    def mean_ability(self) -> float:
        """Frequency-weighted cohort mean ability (the representative ability)."""
        return float(sum(a.frequency * a.ability for a in self._archetypes))

    def sample_ids(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(n)
        idx = np.searchsorted(self._cum_freq, u, side="right")
        return np.array([self._archetypes[i].id for i in idx], dtype=np.int64)


_ARCHETYPE_FIELDS = {
    "id",
    "label",
    "frequency",
    "ability",
    "planning_horizon",
    "stress_reactivity",
    "belonging_sensitivity",
    "resilience",
    "init_stress",
    "init_belonging",
}


def load_archetypes(source: str | Path | dict) -> ArchetypeTable:
    """Load an archetype table from JSON text, a file path, or a dict."""
    if isinstance(source, Path):
        raw = source.read_text(encoding="utf-8")
    elif isinstance(source, str):
        p = Path(source)
        raw = p.read_text(encoding="utf-8") if p.suffix == ".json" and p.exists() else source
    else:
        raw = None

    if raw is not None:
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ArchetypeTableError(f"malformed archetype JSON: {exc}") from exc
    else:
        data = source

    if not isinstance(data, dict) or set(data) != {"archetypes"} or not isinstance(data["archetypes"], list):
        raise ArchetypeTableError('archetype JSON must be an object with a single "archetypes" list')

    out = []
    for i, entry in enumerate(data["archetypes"]):
        if not isinstance(entry, dict):
            raise ArchetypeTableError(f"archetypes[{i}] is not an object")
        unknown = set(entry) - _ARCHETYPE_FIELDS
        if unknown:
            raise ArchetypeTableError(f"archetypes[{i}]: unknown fields {sorted(unknown)}")
        missing = _ARCHETYPE_FIELDS - set(entry)
        if missing:
            raise ArchetypeTableError(f"archetypes[{i}]: missing fields {sorted(missing)}")
        try:
            horizon = PlanningHorizon(entry["planning_horizon"])
            resilience = Resilience(entry["resilience"])
        except ValueError as exc:
            raise ArchetypeTableError(f"archetypes[{i}]: {exc}") from exc
        for key in ("init_stress", "init_belonging"):
            block = entry[key]
            if not isinstance(block, dict) or set(block) != {"mean", "std"}:
                raise ArchetypeTableError(f"archetypes[{i}]: {key} must be {{mean, std}}")
        out.append(
            Archetype(
                id=int(entry["id"]),
                label=str(entry["label"]),
                frequency=float(entry["frequency"]),
                ability=float(entry["ability"]),
                planning_horizon=horizon,
                stress_reactivity=float(entry["stress_reactivity"]),
                belonging_sensitivity=float(entry["belonging_sensitivity"]),
                resilience=resilience,
                init_stress_mean=float(entry["init_stress"]["mean"]),
                init_stress_std=float(entry["init_stress"]["std"]),
                init_belonging_mean=float(entry["init_belonging"]["mean"]),
                init_belonging_std=float(entry["init_belonging"]["std"]),
            )
        )
    return ArchetypeTable(out)


def default_archetype_table() -> ArchetypeTable:
    """The packaged 13-archetype fixture."""
    text = resources.files("cohortsim.data").joinpath("archetypes_13.json").read_text(encoding="utf-8")
    return load_archetypes(json.loads(text))


@dataclass(slots=True)
class DebtItem:
    """A regularized course whose final examination is still pending."""

    course_id: str
    semester_incurred: int
    age: int = 0


@dataclass(slots=True)
class AgentState:
    """Evolving state of one simulated student."""

    agent_id: int
    archetype_id: int
    stress: float
    belonging: float
    transcript: Transcript = field(default_factory=Transcript)
    finals_debt: list[DebtItem] = field(default_factory=list)
    status: AgentStatus = AgentStatus.ACTIVE
    dropout_semester: int | None = None
    dropout_cause: DropoutCause | None = None
    killer_failures: int = 0
    remedial_acceptances: int = 0


def _truncated_draw(mean: float, std: float, lo: float, hi: float, rng: np.random.Generator) -> float:
    """Normal draw truncated to [lo, hi] by resampling; clamps after 100 attempts."""
    if std == 0.0:
        return min(max(mean, lo), hi)
    for _ in range(RESAMPLE_ATTEMPTS):
        x = rng.normal(mean, std)
        if lo <= x <= hi:
            return float(x)
    return min(max(x, lo), hi)


def init_psych_state(archetype: Archetype, rng: np.random.Generator) -> tuple[float, float]:
    """Draw (stress, belonging) from the archetype's truncated normals."""
    stress = _truncated_draw(archetype.init_stress_mean, archetype.init_stress_std, 0.0, 1.0, rng)
    belonging = _truncated_draw(archetype.init_belonging_mean, archetype.init_belonging_std, 0.0, 1.0, rng)
    return stress, belonging


def sample_cohort(table: ArchetypeTable, n: int, seed: int) -> list[AgentState]:
    """Sample a cohort of ``n`` agents, reproducibly for a given seed.

    Archetype labels are i.i.d. from the table frequencies; each agent's
    initial stress and belonging come from its own addressed stream, so the
    cohort is identical regardless of construction order.
    """
    if n < 0:
        raise ValueError("cohort size must be >= 0")
    kit = StreamKit(seed)
    ids = table.sample_ids(n, kit.cohort_stream(Purpose.ARCHETYPE))
    agents = []
    for agent_id in range(n):
        archetype = table[int(ids[agent_id])]
        stress, belonging = init_psych_state(archetype, kit.stream(agent_id, 0, Purpose.INIT_PSYCH))
        agents.append(
            AgentState(
                agent_id=agent_id,
                archetype_id=archetype.id,
                stress=stress,
                belonging=belonging,
            )
        )
    return agents
