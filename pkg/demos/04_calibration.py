"""
Calibrating the historical scenario
===================================

Fit the hazard coefficients so the simulated yearly cumulative-dropout curve
matches the empirical target within RMSE 0.05.  This demo searches a small
sub-grid around the shipped defaults (the full shipped grid of 375 candidates
takes a few minutes; see `cohortsim calibrate`).
"""

from cohortsim.calibration import SearchSpace, calibrate, default_empirical_target
from cohortsim.config import default_config

bundle = default_config()
cfg = bundle.experiment
target = default_empirical_target()
print("target curve:", list(target.values))

space = SearchSpace(
    alpha0=(-3.0, -2.0),
    alpha1=(2.25,),
    alpha2=(-4.75, -3.5),
    reg_success_scale=(1.6,),
    stress_fail_gain=(cfg.psych.stress_fail_gain,),
    debt_stress_per_item=(cfg.psych.debt_stress_per_item,),
    calibration_replications=3,
)
print(f"searching {space.size()} candidates x {space.calibration_replications} replications...")

result = calibrate(space, cfg, target, tolerance=0.05)
print(f"accepted: {result.accepted}  rmse: {result.achieved_rmse:.4f}")
print("winner:", result.params)
print("fitted curve:", [round(v, 3) for v in result.curve])

print("\nall evaluations:")
for e in result.evaluations:
    tag = "pruned after 1 rep" if e.pruned else f"{e.replications_used} reps"
    print(f"  rmse={e.rmse:.4f} alpha0={e.params['alpha0']:+.2f} alpha2={e.params['alpha2']:+.2f} ({tag})")
