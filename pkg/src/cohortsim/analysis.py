"""Survival curves, equity gaps, psychosocial series, scenario summaries, audits."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import AgentRecord, ExperimentResult, ReplicationResult
from .policy import ScenarioKind
from .population import AgentStatus, DropoutCause, Resilience

__all__ = [
    "ScenarioSummary",
    "TrajectorySeries",
    "AuditCheck",
    "AuditReport",
    "summarize_scenario",
    "km_dropout_curve",
    "equity_gap",
    "dropout_rate_by_resilience",
    "psychosocial_trajectories",
    "audit",
    "write_summary_csv",
    "write_curves_csv",
    "write_audit_report",
    "load_agent_outcomes",
    "render_figures",
    "SUMMARY_COLUMNS",
]

SUMMARY_COLUMNS = (
    "scenario",
    "n_agents",
    "n_replications",
    "overall_dropout_rate",
    "overall_graduation_rate",
    "normative_dropout_frac",
    "academic_dropout_frac",
    "other_dropout_frac",
    "mean_time_to_event",
    "median_time_to_event",
    "mean_final_debt",
    "mean_killer_failures",
    "mean_remedial_acceptances",
    "equity_gap_low_vs_high_resilience",
    "dropout_rate_low_resilience",
    "dropout_rate_high_resilience",
)

CONSISTENCY_TOLERANCE = 1e-9
# summary CSV stores 6-decimal reals, so file-vs-recomputed checks allow round-off
ROUNDING_TOLERANCE = 5e-7


@dataclass(frozen=True)
class ScenarioSummary:
    """One scenario's row of the policy trade-off table."""

    scenario: str
    n_agents: int
    n_replications: int
    overall_dropout_rate: float
    overall_graduation_rate: float
    normative_dropout_frac: float | None
    academic_dropout_frac: float | None
    other_dropout_frac: float | None
    mean_time_to_event: float | None
    median_time_to_event: float | None
    mean_final_debt: float
    mean_killer_failures: float
    mean_remedial_acceptances: float
    equity_gap_low_vs_high_resilience: float
    dropout_rate_low_resilience: float
    dropout_rate_high_resilience: float


@dataclass(frozen=True)
class TrajectorySeries:
    """Per-semester aggregates plus survivorship-bias-free final means."""

    semesters: tuple[int, ...]
    cumulative_dropout_fraction: tuple[float, ...]
    mean_stress_active: tuple[float | None, ...]
    mean_belonging_active: tuple[float | None, ...]
    final_mean_stress: float
    final_mean_belonging: float


def _all_records(reps: Sequence[ReplicationResult]) -> list[AgentRecord]:
    out: list[AgentRecord] = []
    for rep in reps:
        out.extend(rep.records)
    return out


def dropout_rate_by_resilience(reps: Sequence[ReplicationResult], resilience: Resilience) -> float:
    """Pooled dropout rate of one resilience class across replications."""
    members = [r for r in _all_records(reps) if r.resilience == resilience.value]
    if not members:
        raise ValueError(f"no agents in resilience class {resilience.value}")
    dropped = sum(1 for r in members if r.status == AgentStatus.DROPPED.value)
    return dropped / len(members)


def equity_gap(
    reps: Sequence[ReplicationResult],
    class_low: Resilience = Resilience.LOW,
    class_high: Resilience = Resilience.HIGH,
) -> float:
    """Dropout rate of the low-resilience class minus the high-resilience class."""
    return dropout_rate_by_resilience(reps, class_low) - dropout_rate_by_resilience(reps, class_high)


def km_dropout_curve(reps: Sequence[ReplicationResult]) -> np.ndarray:
    """Per-semester cumulative dropout fraction, mean of per-replication curves."""
    if not reps:
        raise ValueError("no replication results given")
    horizon = len(reps[0].semester_stats)
    curves = []
    for rep in reps:
        counts = np.zeros(horizon)
        for record in rep.records:
            if record.dropout_semester is not None:
                counts[record.dropout_semester - 1] += 1
        curves.append(np.cumsum(counts) / rep.cohort_size)
    return np.mean(curves, axis=0)


def psychosocial_trajectories(reps: Sequence[ReplicationResult]) -> TrajectorySeries:
    """Active-only per-semester means plus final means over all agents.

    Final values include dropped agents at their at-dropout state to avoid
    survivorship bias.  Per-semester means pool every agent active at that
    semester across replications.
    """
    if not reps:
        raise ValueError("no replication results given")
    horizon = len(reps[0].semester_stats)
    stress: list[float | None] = []
    belonging: list[float | None] = []
    for t in range(horizon):
        # pooled over agents active at t; semesters with no active agents (or
        # results reloaded from final snapshots, which carry no psych series)
        # yield None
        stats = [
            rep.semester_stats[t]
            for rep in reps
            if rep.semester_stats[t].active and rep.semester_stats[t].mean_stress_active is not None
        ]
        active_total = sum(st.active for st in stats)
        if active_total == 0:
            stress.append(None)
            belonging.append(None)
            continue
        stress.append(sum(st.mean_stress_active * st.active for st in stats) / active_total)
        belonging.append(sum(st.mean_belonging_active * st.active for st in stats) / active_total)
    records = _all_records(reps)
    return TrajectorySeries(
        semesters=tuple(range(1, horizon + 1)),
        cumulative_dropout_fraction=tuple(float(x) for x in km_dropout_curve(reps)),
        mean_stress_active=tuple(stress),
        mean_belonging_active=tuple(belonging),
        final_mean_stress=float(np.mean([r.final_stress for r in records])),
        final_mean_belonging=float(np.mean([r.final_belonging for r in records])),
    )


def summarize_scenario(reps: Sequence[ReplicationResult]) -> ScenarioSummary:
    """Compute every trade-off table column for one scenario's replications."""
    if not reps:
        raise ValueError("no replication results given")
    records = _all_records(reps)
    n = len(records)
    dropout_rates = [
        sum(1 for r in rep.records if r.status == AgentStatus.DROPPED.value) / rep.cohort_size for rep in reps
    ]
    graduation_rates = [
        sum(1 for r in rep.records if r.status == AgentStatus.GRADUATED.value) / rep.cohort_size for rep in reps
    ]
    dropped = [r for r in records if r.status == AgentStatus.DROPPED.value]
    if dropped:
        causes = [r.dropout_cause for r in dropped]
        normative = causes.count(DropoutCause.NORMATIVE.value) / len(dropped)
        academic = causes.count(DropoutCause.ACADEMIC.value) / len(dropped)
        other = causes.count(DropoutCause.OTHER.value) / len(dropped)
        times = [r.dropout_semester for r in dropped]
        mean_tte = float(np.mean(times))
        median_tte = float(np.median(times))
    else:
        normative = academic = other = None
        mean_tte = median_tte = None
    low_rate = dropout_rate_by_resilience(reps, Resilience.LOW)
    high_rate = dropout_rate_by_resilience(reps, Resilience.HIGH)
    return ScenarioSummary(
        scenario=reps[0].scenario.value,
        n_agents=reps[0].cohort_size,
        n_replications=len(reps),
        overall_dropout_rate=float(np.mean(dropout_rates)),
        overall_graduation_rate=float(np.mean(graduation_rates)),
        normative_dropout_frac=normative,
        academic_dropout_frac=academic,
        other_dropout_frac=other,
        mean_time_to_event=mean_tte,
        median_time_to_event=median_tte,
        mean_final_debt=float(np.mean([r.final_debt for r in records])),
        mean_killer_failures=float(np.mean([r.killer_failures for r in records])),
        mean_remedial_acceptances=float(np.mean([r.remedial_acceptances for r in records])),
        equity_gap_low_vs_high_resilience=low_rate - high_rate,
        dropout_rate_low_resilience=low_rate,
        dropout_rate_high_resilience=high_rate,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_summary_csv(replications: dict[ScenarioKind, Sequence[ReplicationResult]], path: Path) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    for kind, reps in replications.items():
        summary = summarize_scenario(reps)
        lines.append(",".join(_fmt(getattr(summary, col)) for col in SUMMARY_COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_curves_csv(
    replications: dict[ScenarioKind, Sequence[ReplicationResult]],
    path: Path,
    stress_overlay: dict[tuple[str, int], tuple[str, str]] | None = None,
) -> None:
    """Write the per-semester curve table.

    ``stress_overlay`` maps (scenario, semester) to preformatted stress and
    belonging strings; it lets `report` keep the simulated psych columns when
    recomputing curves from the agent file, where they are not derivable.
    """
    lines = ["scenario,semester,cumulative_dropout,mean_stress_active,mean_belonging_active"]
    for kind, reps in replications.items():
        series = psychosocial_trajectories(reps)
        for i, semester in enumerate(series.semesters):
            if stress_overlay is not None:
                stress_s, belonging_s = stress_overlay.get((kind.value, semester), ("", ""))
            else:
                stress_s = _fmt(series.mean_stress_active[i])
                belonging_s = _fmt(series.mean_belonging_active[i])
            lines.append(
                ",".join(
                    (
                        kind.value,
                        str(semester),
                        _fmt(series.cumulative_dropout_fraction[i]),
                        stress_s,
                        belonging_s,
                    )
                )
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Audit: consistency checks over a written run directory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditCheck:
    name: str
    passed: bool
    observed: object
    expected: object
    details: str = ""


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[AuditCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "observed": c.observed,
                    "expected": c.expected,
                    "details": c.details,
                }
                for c in self.checks
            ],
        }


def _parse_agent_rows(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["replication"] = int(row["replication"])
        row["agent_id"] = int(row["agent_id"])
        row["dropout_semester"] = int(row["dropout_semester"]) if row["dropout_semester"] else None
        row["final_stress"] = float(row["final_stress"])
        row["final_belonging"] = float(row["final_belonging"])
        row["final_debt"] = int(row["final_debt"])
    return rows


def load_agent_outcomes(path: Path, horizon: int) -> dict[ScenarioKind, list[ReplicationResult]]:
    """Rebuild per-replication results from the agent outcomes CSV.

    Semester aggregates other than dropout counts are not recoverable from
    final snapshots, so ``semester_stats`` carries only the counts needed by
    the curve computations.
    """
    from .engine import SemesterAggregate

    rows = _parse_agent_rows(path)
    grouped: dict[tuple[str, int], list[dict]] = {}
    for row in rows:
        grouped.setdefault((row["scenario"], row["replication"]), []).append(row)
    out: dict[ScenarioKind, list[ReplicationResult]] = {}
    for (scenario, replication) in sorted(grouped, key=lambda k: (ScenarioKind(k[0]).code, k[1])):
        group = grouped[(scenario, replication)]
        records = tuple(
            AgentRecord(
                agent_id=row["agent_id"],
                archetype_id=int(row["archetype_id"]),
                resilience=row["resilience"],
                status=row["status"],
                dropout_semester=row["dropout_semester"],
                dropout_cause=row["dropout_cause"] or None,
                final_stress=row["final_stress"],
                final_belonging=row["final_belonging"],
                final_debt=row["final_debt"],
                killer_failures=int(row["killer_failures"]),
                remedial_acceptances=int(row["remedial_acceptances"]),
                courses_passed=int(row["courses_passed"]),
            )
            for row in sorted(group, key=lambda r: r["agent_id"])
        )
        stats = []
        dropped_cum = 0
        for t in range(1, horizon + 1):
            dropped_cum = sum(1 for r in records if r.dropout_semester is not None and r.dropout_semester <= t)
            stats.append(
                SemesterAggregate(
                    semester=t,
                    active=len(records) - dropped_cum,
                    dropped_cum=dropped_cum,
                    graduated_cum=0,
                    mean_stress_active=None,
                    mean_belonging_active=None,
                )
            )
        kind = ScenarioKind(scenario)
        out.setdefault(kind, []).append(
            ReplicationResult(
                scenario=kind,
                replication=replication,
                cohort_size=len(records),
                records=records,
                semester_stats=tuple(stats),
            )
        )
    return out


def _parse_summary_rows(path: Path) -> dict[str, dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return {row["scenario"]: row for row in csv.DictReader(fh)}


def audit(output_dir: str | Path) -> AuditReport:
    """Run the consistency checks over a written run directory.

    Checks: record counts, metadata agreement, dropout-curve consistency,
    the three policy orderings, and the structural final-debt bounds.
    """
    output_dir = Path(output_dir)
    config_path = output_dir / "config_effective.json"
    agents_path = output_dir / "agent_outcomes_all_runs.csv"
    summary_path = output_dir / "policy_tradeoff_summary.csv"
    for p in (config_path, agents_path, summary_path):
        if not p.exists():
            raise FileNotFoundError(f"missing output file: {p}")
    config = json.loads(config_path.read_text(encoding="utf-8"))
    rows = _parse_agent_rows(agents_path)
    summary = _parse_summary_rows(summary_path)
    horizon = config["horizon_semesters"]
    checks: list[AuditCheck] = []

    # (1) total record count
    expected_rows = config["cohort_size"] * config["n_scenarios"] * config["replications_per_scenario"]
    checks.append(
        AuditCheck(
            name="record_count",
            passed=len(rows) == expected_rows,
            observed=len(rows),
            expected=expected_rows,
            details="rows in agent_outcomes_all_runs.csv vs cohort_size x n_scenarios x replications",
        )
    )

    # (2) metadata consistency: per-scenario replication and cohort counts + summary echo
    by_scenario: dict[str, list[dict]] = {}
    for row in rows:
        by_scenario.setdefault(row["scenario"], []).append(row)
    meta_ok = set(by_scenario) == set(config["scenarios"]) == set(summary)
    problems = [] if meta_ok else ["scenario sets differ between files"]
    for scenario, group in sorted(by_scenario.items()):
        reps = sorted({r["replication"] for r in group})
        if len(reps) != config["replications_per_scenario"]:
            meta_ok = False
            problems.append(f"{scenario}: {len(reps)} replications, expected {config['replications_per_scenario']}")
        per_rep = {rep: sum(1 for r in group if r["replication"] == rep) for rep in reps}
        if any(c != config["cohort_size"] for c in per_rep.values()):
            meta_ok = False
            problems.append(f"{scenario}: uneven cohort sizes {sorted(set(per_rep.values()))}")
        if scenario in summary:
            srow = summary[scenario]
            if int(srow["n_agents"]) != config["cohort_size"] or int(srow["n_replications"]) != config["replications_per_scenario"]:
                meta_ok = False
                problems.append(f"{scenario}: summary n_agents/n_replications disagree with config")
            observed_rate = sum(1 for r in group if r["status"] == "DROPPED") / len(group)
            if abs(float(srow["overall_dropout_rate"]) - observed_rate) > ROUNDING_TOLERANCE:
                meta_ok = False
                problems.append(f"{scenario}: summary overall_dropout_rate disagrees with agent rows")
    checks.append(
        AuditCheck(
            name="metadata_consistency",
            passed=meta_ok,
            observed="; ".join(problems) if problems else "consistent",
            expected="consistent",
        )
    )

    # (3) validate_dropout_curve_consistency: final cumulative == overall rate
    curve_ok = True
    curve_details = []
    for scenario, group in sorted(by_scenario.items()):
        final_cum = sum(
            1 for r in group if r["dropout_semester"] is not None and r["dropout_semester"] <= horizon
        ) / len(group)
        overall = sum(1 for r in group if r["status"] == "DROPPED") / len(group)
        delta = abs(final_cum - overall)
        curve_details.append(f"{scenario}: |{final_cum:.9f} - {overall:.9f}| = {delta:.2e}")
        if delta > CONSISTENCY_TOLERANCE:
            curve_ok = False
    checks.append(
        AuditCheck(
            name="dropout_curve_consistency",
            passed=curve_ok,
            observed="; ".join(curve_details),
            expected=f"final cumulative dropout == overall rate within {CONSISTENCY_TOLERANCE}",
        )
    )

    a, b, c = (ScenarioKind.A_HISTORICAL.value, ScenarioKind.B_DIRECT_PROMOTION.value, ScenarioKind.C_SAFETY_NET.value)
    have_all = all(k in summary for k in (a, b, c))

    # (4) dropout ordering A < C < B, from the summary table
    if have_all:
        rate = {k: float(summary[k]["overall_dropout_rate"]) for k in (a, b, c)}
        ordering_ok = rate[a] < rate[c] < rate[b]
        checks.append(
            AuditCheck(
                name="dropout_policy_ordering",
                passed=ordering_ok,
                observed={k: rate[k] for k in (a, c, b)},
                expected="A < C < B",
            )
        )

        # (5) equity gap ordering gap_A < gap_C < gap_B
        gap = {k: float(summary[k]["equity_gap_low_vs_high_resilience"]) for k in (a, b, c)}
        gap_ok = gap[a] < gap[c] < gap[b]
        checks.append(
            AuditCheck(
                name="equity_gap_ordering",
                passed=gap_ok,
                observed={k: gap[k] for k in (a, c, b)},
                expected="gap_A < gap_C < gap_B",
            )
        )

        # (6) mean final stress ordering C <= B < A, from agent rows
        stress = {
            k: float(np.mean([r["final_stress"] for r in by_scenario[k]])) for k in (a, b, c) if k in by_scenario
        }
        stress_ok = len(stress) == 3 and stress[c] <= stress[b] < stress[a]
        checks.append(
            AuditCheck(
                name="stress_policy_ordering",
                passed=stress_ok,
                observed=stress,
                expected="C <= B < A",
            )
        )
    else:
        checks.append(
            AuditCheck(
                name="dropout_policy_ordering",
                passed=False,
                observed=sorted(summary),
                expected=[a, b, c],
                details="ordering checks need all three scenarios",
            )
        )

    # (7) structural final-debt bounds under direct promotion
    debt_ok = True
    debt_details = []
    for scenario, bound, exact in ((b, 0.0, True), (c, 0.01, False)):
        if scenario not in by_scenario:
            continue
        mean_debt = float(np.mean([r["final_debt"] for r in by_scenario[scenario]]))
        debt_details.append(f"{scenario}: mean_final_debt={mean_debt}")
        if exact and mean_debt != 0.0:
            debt_ok = False
        if not exact and mean_debt > bound:
            debt_ok = False
    checks.append(
        AuditCheck(
            name="final_debt_bounds",
            passed=debt_ok,
            observed="; ".join(debt_details),
            expected="B exactly 0; C <= 0.01",
        )
    )

    return AuditReport(tuple(checks))


def write_audit_report(report: AuditReport, path: Path) -> None:
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def render_figures(run_dir: str | Path, fmt: str = "svg") -> list[Path]:
    """Render the four standard charts from a run directory's CSV outputs."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run_dir = Path(run_dir)
    figures_dir = run_dir / "figures"
    figures_dir.mkdir(exist_ok=True)
    summary = _parse_summary_rows(run_dir / "policy_tradeoff_summary.csv")
    with (run_dir / "dropout_curves.csv").open(newline="", encoding="utf-8") as fh:
        curve_rows = list(csv.DictReader(fh))
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for scenario in sorted(summary):
        pts = [(int(r["semester"]), float(r["cumulative_dropout"])) for r in curve_rows if r["scenario"] == scenario]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scenario)
    ax.set_xlabel("semester")
    ax.set_ylabel("cumulative dropout fraction")
    ax.legend()
    path = figures_dir / f"fig1_dropout_curves.{fmt}"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for scenario, row in sorted(summary.items()):
        x = float(row["overall_dropout_rate"])
        y = float(row["equity_gap_low_vs_high_resilience"])
        size = 100 + 400 * float(row["mean_remedial_acceptances"] or 0)
        ax.scatter([x], [y], s=size, alpha=0.6)
        ax.annotate(scenario, (x, y))
    ax.set_xlabel("overall dropout rate")
    ax.set_ylabel("equity gap (LOW - HIGH)")
    path = figures_dir / f"fig2_efficiency_vs_equity.{fmt}"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    scenarios = sorted(summary)
    stress_rows: dict[str, list[float]] = {s: [] for s in scenarios}
    for r in curve_rows:
        if r["mean_stress_active"]:
            stress_rows[r["scenario"]].append(float(r["mean_stress_active"]))
    xs = np.arange(len(scenarios))
    ax.bar(xs - 0.2, [stress_rows[s][-1] if stress_rows[s] else 0 for s in scenarios], width=0.4, label="stress (active, final semester)")
    belonging_rows: dict[str, list[float]] = {s: [] for s in scenarios}
    for r in curve_rows:
        if r["mean_belonging_active"]:
            belonging_rows[r["scenario"]].append(float(r["mean_belonging_active"]))
    ax.bar(xs + 0.2, [belonging_rows[s][-1] if belonging_rows[s] else 0 for s in scenarios], width=0.4, label="belonging (active, final semester)")
    ax.set_xticks(xs, scenarios, rotation=15)
    ax.legend()
    path = figures_dir / f"fig3_stress_belonging.{fmt}"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    low = [float(summary[s]["dropout_rate_low_resilience"]) for s in scenarios]
    high = [float(summary[s]["dropout_rate_high_resilience"]) for s in scenarios]
    ax.bar(xs - 0.2, low, width=0.4, label="LOW resilience")
    ax.bar(xs + 0.2, high, width=0.4, label="HIGH resilience")
    ax.set_xticks(xs, scenarios, rotation=15)
    ax.set_ylabel("dropout rate")
    ax.legend()
    path = figures_dir / f"fig4_dropout_by_resilience.{fmt}"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)
    return written
