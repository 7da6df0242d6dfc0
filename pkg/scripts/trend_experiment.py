"""Desk-scale convergence-speed comparison of PSO with random and stacked LDS streams.

Runs D=10 Zakharov and Rastrigin with N=40, G=1000 and prints the mean-curve
CS of each sampler at the requested tolerance.

    python scripts/trend_experiment.py --runs 30 --jobs 4
"""

import argparse
import tempfile

from ldseds import harness


def trend_config(runs=30, horizon=1000, n_particles=40, dim=10, tol=0.05, master_seed=2024,
                 jobs=1, output_dir=None, generators=("scrambled_halton",)):
    algorithms = [{"id": "Rand", "engine": "pso", "construction": "random"}]
    algorithms += [{"id": g, "engine": "pso", "construction": "combined", "generator": g}
                   for g in generators]
    return harness.ExperimentConfig.from_dict({
        "dim": dim, "n_particles": n_particles, "horizon": horizon, "runs_per_cell": runs,
        "tolerances": [tol], "master_seed": master_seed, "jobs": jobs,
        "output_dir": output_dir or tempfile.mkdtemp(prefix="ldseds-trend-"),
        "functions": [{"id": "f01_zakharov_sr"}, {"id": "f03_rastrigin_sr"}],
        "algorithms": algorithms,
    })


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=30)
    ap.add_argument("--horizon", type=int, default=1000)
    ap.add_argument("--tol", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    ap.add_argument("--generators", default="scrambled_halton",
                    help="comma-separated seed-set generators")
    args = ap.parse_args()
    cfg = trend_config(args.runs, args.horizon, tol=args.tol, master_seed=args.seed, jobs=args.jobs,
                       output_dir=args.out, generators=tuple(args.generators.split(",")))
    rs = harness.run_experiment(cfg)
    table = harness.summarize(rs, args.tol)
    print(f"results in {rs.root}")
    print(f"{'function':<22}" + "".join(f"{c:>18}" for c in table.col_labels))
    for label, row in zip(table.row_labels, table.metric):
        print(f"{label:<22}" + "".join(f"{'-' if v is None else v:>18}" for v in row))


if __name__ == "__main__":
    main()
