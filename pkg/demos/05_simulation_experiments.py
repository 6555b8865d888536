"""Seeded Monte Carlo experiments: interval coverage and CDF goodness of fit.

Run: python3 demos/05_simulation_experiments.py
The same experiments are available as ``dpratio simulate``.
"""

from dpratio import ExperimentGrid, run_experiment

grid = ExperimentGrid.protocol("coverage", pairs=((0.5, 0.5), (0.1, 0.1)), replications=10_000, seed=1)
for rec in run_experiment(grid, workers=2):
    c = rec.coords
    print(f"p=({c['p_x']}, {c['p_y']}) {c['method']:22s} coverage={rec.metrics['coverage']:.3f} "
          f"+/- {rec.stderr['coverage']:.3f}")

grid = ExperimentGrid.protocol("cdf", replications=200_000, seed=1)
for rec in run_experiment(grid):
    print("cdf cell", rec.coords, f"KS={rec.metrics['ks']:.4f}")
