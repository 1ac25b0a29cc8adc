"""Monte Carlo comparison of radii on the bundled two-scenario study.

Each run samples one trajectory under the true chain and filters it under
the nominal chain for every radius.  Differences are paired per run and
summarized with a bootstrap interval.  The same study is available as
``drgpb experiment --config paper_sec4.json``.

Run with ``python3 demos/monte_carlo.py [runs]``.
"""
import sys

from drgpb.experiment import ExperimentSpec, compare_radii, run_experiment
from drgpb.io import load_bundled_config

runs = int(sys.argv[1]) if len(sys.argv) > 1 else 50
spec = ExperimentSpec.from_config(load_bundled_config(), runs=runs, radii=(0.0, 0.1, 0.3, 0.5))
summary = compare_radii(run_experiment(spec))

for win in ("I", "II"):
    print(f"window {win}")
    for row in summary["rows"]:
        w = row["windows"][win]
        lo, hi = w["diff_ci95"]
        print(f"  R_TV={row['rtv']:<4g} RMSE {w['mean_rmse']:.3f}  diff {w['mean_diff_vs_0']:+.3f} "
              f"[{lo:+.3f}, {hi:+.3f}]  better {w['runs_better']:3d}/{runs}  "
              f"mode rate nu* {w['mode_rate_nu']:.2f} mu {w['mode_rate_mu']:.2f}")
