"""Prerequisite-constrained curriculum graph: loading, validation, queries, synthesis.

The curriculum is a DAG of compulsory courses.  Each course carries a friction
coefficient (historical difficulty, in [0, 1]) and a bottleneck flag for the
early high-failure courses that block large parts of the downstream plan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Course",
    "CurriculumGraph",
    "Transcript",
    "Finding",
    "ValidationReport",
    "CurriculumError",
    "CurriculumFormatError",
    "CurriculumValidationError",
    "GeneratorConfig",
    "load_curriculum",
    "validate_graph",
    "available_courses",
    "generate_synthetic_curriculum",
]

_COURSE_FIELDS = {"id", "name", "nominal_semester", "friction", "is_bottleneck", "prerequisites"}

# Regularity-regime scenario label; compared as a plain string so this module
# stays below the policy layer.
_REGULARITY_REGIME = "A_HISTORICAL"


class CurriculumError(Exception):
    """Base class for curriculum problems."""


class CurriculumFormatError(CurriculumError):
    """Raised when a curriculum file does not match the expected JSON schema."""


class CurriculumValidationError(CurriculumError):
    """Raised when a structurally parseable curriculum violates an invariant."""

    def __init__(self, findings: list["Finding"]):
        self.findings = findings
        super().__init__("; ".join(f.message for f in findings))


@dataclass(frozen=True)
class Course:
    """One compulsory course in the study plan."""

    id: str
    name: str
    nominal_semester: int
    friction: float
    is_bottleneck: bool
    prerequisites: frozenset[str]


@dataclass(frozen=True)
class Finding:
    """A single validation finding (data, not an exception)."""

    code: str
    course_ids: tuple[str, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


@dataclass
class Transcript:
    """What an agent has achieved so far.

    ``regularized`` is only populated under the historical regularity regime;
    a course that is eventually passed leaves that set.
    """

    passed: set[str] = field(default_factory=set)
    regularized: set[str] = field(default_factory=set)
    failed_attempts: dict[str, int] = field(default_factory=dict)

    def total_failed_attempts(self) -> int:
        return sum(self.failed_attempts.values())


class CurriculumGraph:
    """Immutable prerequisite DAG over courses.

    Construction only checks id uniqueness; run :func:`validate_graph` (or go
    through :func:`load_curriculum` / the synthetic generator, which both do)
    for the full invariant check.
    """

    def __init__(self, courses: Iterable[Course]):
        self._courses: dict[str, Course] = {}
        for c in courses:
            if c.id in self._courses:
                raise CurriculumFormatError(f"duplicate course id {c.id!r}")
            self._courses[c.id] = c
        # Fixed enrolment-candidate order: recommended-plan slot, then id.
        self._plan_order: tuple[Course, ...] = tuple(
            sorted(self._courses.values(), key=lambda c: (c.nominal_semester, c.id))
        )

    @property
    def course_count(self) -> int:
        return len(self._courses)

    def __len__(self) -> int:
        return len(self._courses)

    def __contains__(self, course_id: str) -> bool:
        return course_id in self._courses

    def __iter__(self) -> Iterator[Course]:
        return iter(self._plan_order)

    def course(self, course_id: str) -> Course:
        return self._courses[course_id]

    def course_ids(self) -> set[str]:
        return set(self._courses)

    @property
    def plan_order(self) -> tuple[Course, ...]:
        return self._plan_order

    @property
    def bottleneck_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self._plan_order if c.is_bottleneck)

    def topological_order(self) -> list[str]:
        """Kahn ordering of course ids; raises ``CurriculumValidationError`` on a cycle."""
        indegree = {cid: 0 for cid in self._courses}
        dependents: dict[str, list[str]] = {cid: [] for cid in self._courses}
        for c in self._plan_order:
            for p in c.prerequisites:
                if p in indegree:
                    indegree[c.id] += 1
                    dependents[p].append(c.id)
        ready = sorted(cid for cid, d in indegree.items() if d == 0)
        order: list[str] = []
        while ready:
            cid = ready.pop(0)
            order.append(cid)
            for dep in sorted(dependents[cid]):
                indegree[dep] -= 1
                if indegree[dep] == 0:
                    ready.append(dep)
        if len(order) != len(self._courses):
            cycles = _strongly_connected_cycles(self._courses)
            raise CurriculumValidationError(
                [
                    Finding("cycle", tuple(sorted(scc)), f"prerequisite cycle: {', '.join(sorted(scc))}")
                    for scc in cycles
                ]
            )
        return order


def _strongly_connected_cycles(courses: dict[str, Course]) -> list[set[str]]:
    """SCCs of size > 1 (plus self-loops) in the prerequisite graph — the cycles."""
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[set[str]] = []
    counter = [0]

    def edges(cid: str) -> list[str]:
        return [p for p in courses[cid].prerequisites if p in courses]

    def strongconnect(v: str) -> None:
        work = [(v, iter(edges(v)))]
        index[v] = lowlink[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges(w))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[node] = min(lowlink[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                scc: set[str] = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.add(w)
                    if w == node:
                        break
                if len(scc) > 1 or node in courses[node].prerequisites:
                    sccs.append(scc)

    for cid in sorted(courses):
        if cid not in index:
            strongconnect(cid)
    return sccs


def validate_graph(graph: CurriculumGraph) -> ValidationReport:
    """Check every course and graph invariant; findings are data, not failures."""
    findings: list[Finding] = []
    ids = graph.course_ids()
    for c in graph.plan_order:
        if not (0.0 <= c.friction <= 1.0):
            findings.append(
                Finding("friction_out_of_range", (c.id,), f"course {c.id}: friction {c.friction} out of [0, 1]")
            )
        if c.nominal_semester < 1:
            findings.append(
                Finding("bad_nominal_semester", (c.id,), f"course {c.id}: nominal_semester {c.nominal_semester} < 1")
            )
        if c.id in c.prerequisites:
            findings.append(Finding("self_prerequisite", (c.id,), f"course {c.id} lists itself as prerequisite"))
        for p in sorted(c.prerequisites):
            if p not in ids:
                findings.append(
                    Finding("dangling_prerequisite", (c.id, p), f"course {c.id}: unknown prerequisite {p!r}")
                )
        if c.is_bottleneck and c.nominal_semester > 4:
            findings.append(
                Finding(
                    "late_bottleneck",
                    (c.id,),
                    f"course {c.id}: bottleneck in semester {c.nominal_semester} (must be <= 4)",
                )
            )
    # Acyclicity via an explicit topological ordering attempt.
    try:
        graph.topological_order()
    except CurriculumValidationError as exc:
        findings.extend(exc.findings)
    return ValidationReport(tuple(findings))


def load_curriculum(source: str | Path | dict) -> CurriculumGraph:
    """Parse and validate a curriculum from JSON text, a file path, or a dict.

    Raises ``CurriculumFormatError`` on malformed input and
    ``CurriculumValidationError`` (with findings naming the offending courses)
    on invariant violations.
    """
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
            raise CurriculumFormatError(f"malformed curriculum JSON: {exc}") from exc
    else:
        data = source

    if not isinstance(data, dict) or set(data) != {"courses"}:
        raise CurriculumFormatError('curriculum JSON must be an object with a single "courses" key')
    if not isinstance(data["courses"], list):
        raise CurriculumFormatError('"courses" must be a list')

    courses = []
    for i, entry in enumerate(data["courses"]):
        if not isinstance(entry, dict):
            raise CurriculumFormatError(f"courses[{i}] is not an object")
        unknown = set(entry) - _COURSE_FIELDS
        if unknown:
            raise CurriculumFormatError(f"courses[{i}]: unknown fields {sorted(unknown)}")
        missing = _COURSE_FIELDS - set(entry)
        if missing:
            raise CurriculumFormatError(f"courses[{i}]: missing fields {sorted(missing)}")
        if not isinstance(entry["id"], str) or not entry["id"]:
            raise CurriculumFormatError(f"courses[{i}]: id must be a non-empty string")
        if not isinstance(entry["nominal_semester"], int) or isinstance(entry["nominal_semester"], bool):
            raise CurriculumFormatError(f"course {entry['id']}: nominal_semester must be an integer")
        if not isinstance(entry["friction"], (int, float)) or isinstance(entry["friction"], bool):
            raise CurriculumFormatError(f"course {entry['id']}: friction must be a number")
        if not isinstance(entry["is_bottleneck"], bool):
            raise CurriculumFormatError(f"course {entry['id']}: is_bottleneck must be a boolean")
        if not isinstance(entry["prerequisites"], list) or not all(isinstance(p, str) for p in entry["prerequisites"]):
            raise CurriculumFormatError(f"course {entry['id']}: prerequisites must be a list of course ids")
        courses.append(
            Course(
                id=entry["id"],
                name=str(entry["name"]),
                nominal_semester=entry["nominal_semester"],
                friction=float(entry["friction"]),
                is_bottleneck=entry["is_bottleneck"],
                prerequisites=frozenset(entry["prerequisites"]),
            )
        )

    graph = CurriculumGraph(courses)
    report = validate_graph(graph)
    if not report.ok:
        raise CurriculumValidationError(list(report.findings))
    return graph


def available_courses(
    graph: CurriculumGraph,
    transcript: Transcript,
    regime: str,
    workload_cap: int,
) -> list[str]:
    """Courses the agent may enrol in this semester, in plan order, up to the cap.

    A course is eligible when it has not been passed (nor, under the
    regularity regime, already regularized into the finals queue) and all its
    prerequisites are satisfied.  Under the regularity regime a prerequisite
    counts as satisfied when passed *or* regularized — agents progress while
    carrying finals debt; under direct-promotion regimes only passed counts.
    """
    if workload_cap < 0:
        raise ValueError("workload_cap must be >= 0")
    passed = transcript.passed
    regularized = transcript.regularized
    use_regularity = regime == _REGULARITY_REGIME
    out: list[str] = []
    for c in graph.plan_order:
        if len(out) >= workload_cap:
            break
        if c.id in passed or (use_regularity and c.id in regularized):
            continue
        if use_regularity:
            if all(p in passed or p in regularized for p in c.prerequisites):
                out.append(c.id)
        else:
            if all(p in passed for p in c.prerequisites):
                out.append(c.id)
    return out


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of the synthetic curriculum generator."""

    course_count: int = 42
    semesters: int = 10
    bottleneck_count: int = 3
    bottleneck_names: tuple[str, ...] = ("Calculus I", "Physics I", "Algebra")
    bottleneck_friction: tuple[float, float] = (0.55, 0.70)
    friction_range: tuple[float, float] = (0.08, 0.30)
    max_prerequisites: int = 3
    chain_density: float = 0.55
    bottleneck_downstream_share: float = 0.60


def _distribute_slots(count: int, semesters: int) -> list[int]:
    base, extra = divmod(count, semesters)
    return [base + (1 if s < extra else 0) for s in range(semesters)]


def _ancestor_sets(courses: dict[str, Course]) -> dict[str, set[str]]:
    ancestors: dict[str, set[str]] = {}

    def visit(cid: str) -> set[str]:
        if cid in ancestors:
            return ancestors[cid]
        acc: set[str] = set()
        for p in courses[cid].prerequisites:
            acc.add(p)
            acc |= visit(p)
        ancestors[cid] = acc
        return acc

    for cid in courses:
        visit(cid)
    return ancestors


def generate_synthetic_curriculum(params: GeneratorConfig, seed: int) -> CurriculumGraph:
    """Deterministically synthesize a curriculum that passes validation.

    Bottlenecks sit in year 1 with high friction; prerequisite chains are
    wired so that every course from year 2 onwards has at least one
    prerequisite path reaching a bottleneck, and each bottleneck gates at
    least ``bottleneck_downstream_share`` of the courses scheduled after it.
    """
    if params.course_count < 1:
        raise ValueError("course_count must be >= 1")
    slots = _distribute_slots(params.course_count, min(params.semesters, params.course_count))
    year1_slots = sum(slots[:2])
    if params.bottleneck_count > year1_slots:
        raise ValueError(
            f"infeasible params: {params.bottleneck_count} bottlenecks exceed {year1_slots} year-1 slots"
        )
    if len(params.bottleneck_names) < params.bottleneck_count:
        raise ValueError("not enough bottleneck_names for bottleneck_count")

    rng = np.random.default_rng(seed)
    width = max(2, len(str(params.course_count)))
    semester_of: dict[str, int] = {}
    by_semester: dict[int, list[str]] = {}
    n = 0
    for sem_idx, slot_count in enumerate(slots, start=1):
        for _ in range(slot_count):
            n += 1
            cid = f"C{n:0{width}d}"
            semester_of[cid] = sem_idx
            by_semester.setdefault(sem_idx, []).append(cid)

    all_ids = sorted(semester_of)
    # Bottlenecks occupy the first year-1 slots, alternating semester 1/2.
    year1_ids = by_semester.get(1, []) + by_semester.get(2, [])
    bottleneck_ids = year1_ids[: params.bottleneck_count]

    frictions: dict[str, float] = {}
    for i, cid in enumerate(all_ids):
        if cid in bottleneck_ids:
            lo, hi = params.bottleneck_friction
        else:
            lo, hi = params.friction_range
        frictions[cid] = round(float(rng.uniform(lo, hi)), 3)

    prereqs: dict[str, set[str]] = {cid: set() for cid in all_ids}
    for cid in all_ids:
        sem = semester_of[cid]
        if sem == 1:
            continue
        earlier = [e for e in all_ids if semester_of[e] < sem]
        recent = [e for e in earlier if semester_of[e] >= sem - 2] or earlier
        k = 1
        while k < params.max_prerequisites and rng.random() < params.chain_density:
            k += 1
        k = min(k, len(earlier))
        picks = list(rng.choice(recent, size=min(k, len(recent)), replace=False))
        prereqs[cid] = set(str(p) for p in picks)

    def build() -> dict[str, Course]:
        return {
            cid: Course(
                id=cid,
                name=(
                    params.bottleneck_names[bottleneck_ids.index(cid)]
                    if cid in bottleneck_ids
                    else f"Course {cid[1:]}"
                ),
                nominal_semester=semester_of[cid],
                friction=frictions[cid],
                is_bottleneck=cid in bottleneck_ids,
                prerequisites=frozenset(prereqs[cid]),
            )
            for cid in all_ids
        }

    # Rewire until every year-2+ course sits downstream of some bottleneck.
    courses = build()
    if bottleneck_ids:
        ancestors = _ancestor_sets(courses)
        bset = set(bottleneck_ids)
        for cid in all_ids:
            if semester_of[cid] <= 2 or ancestors[cid] & bset:
                continue
            candidates = [
                e
                for e in all_ids
                if semester_of[e] < semester_of[cid] and (e in bset or ancestors[e] & bset)
            ]
            target = str(rng.choice(sorted(candidates)))
            if len(prereqs[cid]) >= params.max_prerequisites:
                prereqs[cid].discard(sorted(prereqs[cid])[-1])
            prereqs[cid].add(target)
            courses = build()
            ancestors = _ancestor_sets(courses)

        # Give each bottleneck its required downstream coverage.
        for b in bottleneck_ids:
            later = [cid for cid in all_ids if semester_of[cid] > semester_of[b]]
            if not later:
                continue
            need = int(np.ceil(params.bottleneck_downstream_share * len(later)))
            while True:
                ancestors = _ancestor_sets(build())
                gated = [cid for cid in later if b in ancestors[cid]]
                if len(gated) >= need:
                    break
                ungated = [cid for cid in later if b not in ancestors[cid]]
                # Attach the earliest ungated course; its own dependents inherit the path.
                cid = min(ungated, key=lambda x: (semester_of[x], x))
                donors = [e for e in all_ids if semester_of[e] < semester_of[cid] and (e == b or b in ancestors[e])]
                if len(prereqs[cid]) >= params.max_prerequisites:
                    prereqs[cid].discard(sorted(prereqs[cid])[-1])
                prereqs[cid].add(str(rng.choice(sorted(donors))))

    graph = CurriculumGraph(build().values())
    report = validate_graph(graph)
    if not report.ok:  # construction guarantees this; belt and braces
        raise CurriculumValidationError(list(report.findings))
    return graph
