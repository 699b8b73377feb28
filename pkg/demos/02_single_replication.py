"""
One replication, semester by semester
=====================================

Drive a single historical-regime replication by hand with step_semester and
watch the cohort's state evolve: active counts, psych means, debt load.
"""

from collections import Counter

from cohortsim.config import default_config
from cohortsim.engine import ReplicationRun, step_semester
from cohortsim.policy import ScenarioKind
from cohortsim.population import AgentStatus

bundle = default_config()
cfg = bundle.experiment
policy = cfg.scenario(ScenarioKind.A_HISTORICAL)

run = ReplicationRun(cfg, policy, replication=0)
print("sem  active dropped grad  stress belonging  mean_debt")
for semester in range(1, cfg.horizon_semesters + 1):
    events = step_semester(run, semester)
    st = run.semester_stats[-1]
    active_agents = [a for a in run.agents if a.status is AgentStatus.ACTIVE]
    mean_debt = (
        sum(len(a.finals_debt) for a in active_agents) / len(active_agents) if active_agents else 0.0
    )
    print(
        f"{semester:3d} {st.active:7d} {st.dropped_cum:7d} {st.graduated_cum:4d}"
        f"   {st.mean_stress_active:.3f}    {st.mean_belonging_active:.3f}     {mean_debt:5.2f}"
    )

# Where did the dropouts come from?
causes = Counter(a.dropout_cause.value for a in run.agents if a.dropout_cause)
print("dropout causes:", dict(causes))

# A couple of example event streams from the final semester.
some_agent = next(iter(events))
print(f"agent {some_agent} events in semester {cfg.horizon_semesters}:")
for event in events[some_agent]:
    print("   ", event.kind.value, event.course_id or "", f"friction={event.friction:.2f}")
