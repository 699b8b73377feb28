import csv
import json
from pathlib import Path

import pytest

from cohortsim.cli import main

INLINE_CURRICULUM = {
    "courses": [
        {"id": "C1", "name": "Calculus I", "nominal_semester": 1, "friction": 0.6,
         "is_bottleneck": True, "prerequisites": []},
        {"id": "C2", "name": "Course 2", "nominal_semester": 1, "friction": 0.15,
         "is_bottleneck": False, "prerequisites": []},
        {"id": "C3", "name": "Course 3", "nominal_semester": 2, "friction": 0.2,
         "is_bottleneck": False, "prerequisites": ["C1"]},
        {"id": "C4", "name": "Course 4", "nominal_semester": 2, "friction": 0.1,
         "is_bottleneck": False, "prerequisites": ["C2"]},
    ]
}

INLINE_ARCHETYPES = {
    "archetypes": [
        {"id": 1, "label": "strong", "frequency": 0.3, "ability": 0.8,
         "planning_horizon": "BALANCED", "stress_reactivity": 0.7, "belonging_sensitivity": 1.0,
         "resilience": "HIGH", "init_stress": {"mean": 0.25, "std": 0.08},
         "init_belonging": {"mean": 0.7, "std": 0.08}},
        {"id": 2, "label": "middle", "frequency": 0.4, "ability": 0.6,
         "planning_horizon": "BALANCED", "stress_reactivity": 1.0, "belonging_sensitivity": 1.0,
         "resilience": "MEDIUM", "init_stress": {"mean": 0.4, "std": 0.1},
         "init_belonging": {"mean": 0.55, "std": 0.1}},
        {"id": 3, "label": "fragile", "frequency": 0.3, "ability": 0.5,
         "planning_horizon": "CONSERVATIVE", "stress_reactivity": 1.5, "belonging_sensitivity": 1.2,
         "resilience": "LOW", "init_stress": {"mean": 0.55, "std": 0.1},
         "init_belonging": {"mean": 0.4, "std": 0.1}},
    ]
}


def write_config(tmp_path: Path, **overrides) -> Path:
    data = {
        "cohort_size": 50,
        "horizon_semesters": 12,
        "replications_per_scenario": 2,
        "master_seed": 42,
        "curriculum": INLINE_CURRICULUM,
        "archetypes": INLINE_ARCHETYPES,
        "hazard": {"alpha0": -2.5, "alpha1": 2.5, "alpha2": -3.0},
        "psych": {
            "stress_fail_gain": 0.05, "stress_pass_relief": 0.05,
            "belonging_pass_gain": 0.05, "belonging_fail_loss": 0.02,
            "debt_stress_per_item": 0.03,
        },
        "scenarios": {
            "A": {"reg_success_scale": 1.4},
            "B": {},
            "C": {"remedial_belonging_bonus": 0.18},
        },
        "calibration": {
            "tolerance": 1.0,
            "replications": 2,
            "search_space": {
                "alpha0": [-3.0, -2.5, 2],
                "alpha1": [2.5, 2.5, 1],
                "alpha2": [-3.0, -3.0, 1],
                "reg_success_scale": [1.4, 1.4, 1],
                "stress_fail_gain": [0.05, 0.05, 1],
                "debt_stress_per_item": [0.03, 0.03, 1],
            },
        },
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def read_dir(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


class TestSimulate:
    def test_two_runs_byte_identical(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "run1")]) == 0
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "run2")]) == 0
        assert read_dir(tmp_path / "run1") == read_dir(tmp_path / "run2")

    def test_seed_override_changes_outputs(self, tmp_path):
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "a")])
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "b"), "--seed", "43"])
        assert (tmp_path / "a" / "agent_outcomes_all_runs.csv").read_bytes() != (
            tmp_path / "b" / "agent_outcomes_all_runs.csv"
        ).read_bytes()

    def test_set_override_reflected_in_effective_config(self, tmp_path):
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "o"),
              "--set", "scenarios.C.remedial_capacity_fraction=0.5"])
        effective = json.loads((tmp_path / "o" / "config_effective.json").read_text())
        assert effective["scenarios"]["C_SAFETY_NET"]["remedial_capacity_fraction"] == 0.5

    def test_unknown_override_key_fails(self, tmp_path, capsys):
        config = write_config(tmp_path)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x"),
                     "--set", "scenarios.C.typo=1"]) == 1
        assert "typo" in capsys.readouterr().err

    def test_unknown_override_parent_path_fails(self, tmp_path, capsys):
        config = write_config(tmp_path)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x"),
                     "--set", "scenariozz.C.remedial_stress_cost=1"]) == 1
        assert "unknown config path" in capsys.readouterr().err

    def test_missing_config_fails(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == 1


class TestAuditCommand:
    def test_untampered_run_exits_zero_on_structural_checks(self, tmp_path, capsys):
        # tiny runs may not satisfy the policy orderings, so audit them
        # against a run produced by a config known to order correctly;
        # here we only require the command to run and write its report
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "run")])
        code = main(["audit", str(tmp_path / "run")])
        report = json.loads((tmp_path / "run" / "audit_report.json").read_text())
        by_name = {c["name"]: c for c in report["checks"]}
        assert by_name["record_count"]["passed"]
        assert by_name["dropout_curve_consistency"]["passed"]
        assert code in (0, 2)

    def test_tampered_run_exits_two(self, tmp_path):
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "run")])
        agents = tmp_path / "run" / "agent_outcomes_all_runs.csv"
        lines = agents.read_text().strip().split("\n")
        agents.write_text("\n".join(lines[:-3]) + "\n")
        assert main(["audit", str(tmp_path / "run")]) == 2

    def test_missing_directory_exits_one(self, tmp_path):
        assert main(["audit", str(tmp_path / "missing")]) == 1


class TestReport:
    def test_report_is_idempotent_on_fresh_run(self, tmp_path):
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "run")])
        before = read_dir(tmp_path / "run")
        assert main(["report", str(tmp_path / "run")]) == 0
        after = read_dir(tmp_path / "run")
        assert before == after

    def test_report_rebuilds_deleted_summary(self, tmp_path):
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "run")])
        summary = tmp_path / "run" / "policy_tradeoff_summary.csv"
        original = summary.read_bytes()
        summary.unlink()
        assert main(["report", str(tmp_path / "run")]) == 0
        assert summary.read_bytes() == original

    def test_svg_figures_written_and_wellformed(self, tmp_path):
        config = write_config(tmp_path)
        main(["simulate", "--config", str(config), "--out", str(tmp_path / "run")])
        assert main(["report", str(tmp_path / "run"), "--svg"]) == 0
        figures = sorted((tmp_path / "run" / "figures").glob("*.svg"))
        assert len(figures) == 4
        for fig in figures:
            head = fig.read_text()[:200]
            assert "<?xml" in head or "<svg" in head


class TestCalibrateCommand:
    def test_calibrate_writes_report_and_config(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["calibrate", "--config", str(config), "--out", str(tmp_path / "cal")]) == 0
        report = json.loads((tmp_path / "cal" / "calibration_report.json").read_text())
        assert report["accepted"] is True
        assert report["n_candidates"] == 2
        effective = json.loads((tmp_path / "cal" / "config_effective.json").read_text())
        assert effective["hazard"]["alpha0"] == report["winner"]["alpha0"]

    def test_tolerance_flag_controls_acceptance(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["calibrate", "--config", str(config), "--out", str(tmp_path / "cal2"),
                     "--tolerance", "1e-9"]) == 1


class TestSweep:
    def test_capacity_sweep_rows_and_direction(self, tmp_path):
        config = write_config(tmp_path, cohort_size=400, replications_per_scenario=20)
        code = main([
            "sweep", "--config", str(config), "--out", str(tmp_path / "sw"),
            "--param", "scenarios.C.remedial_capacity_fraction=0.1,0.3,0.5",
        ])
        assert code == 0
        with (tmp_path / "sw" / "sweep_summary.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        assert all(row["scenario"] == "C_SAFETY_NET" for row in rows)
        assert all(row["fidelity"] == "reduced" for row in rows)
        assert all(row["n_replications"] == "5" for row in rows)
        drops = [float(row["overall_dropout_rate"]) for row in rows]
        assert drops[0] >= drops[1] >= drops[2]

    def test_malformed_param_fails(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "sw2"),
                     "--param", "nonsense"]) == 1


class TestUsageErrors:
    def test_unknown_subcommand_exits_one(self):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag_exits_one(self):
        assert main(["simulate", "--frobnicate"]) == 1
