"""Wall-time of the POD + coefficient-regressor path against the full solve.

Trains a surrogate at several mesh resolutions and writes a plot-ready CSV.

    python scripts/rom_speedup.py --resolutions 1000 2000 3000 --out results/speedup.csv
"""

import argparse

import numpy as np

from heatsink_twin import store
from heatsink_twin.pipeline import speedup_check
from heatsink_twin.pod import SnapshotMatrix, build_basis, reconstruct, project
from heatsink_twin.regressors import coefficient_dataset, train_coefficient_regressor
from heatsink_twin.thermal_sim import (HeatsinkGeometry, MaterialProps, OperatingPoint,
                                       generate_snapshots, solve_steady)


def measure(resolution, n_train, n_queries, seed):
    g, mat = HeatsinkGeometry(), MaterialProps()
    snaps = generate_snapshots(g, mat, (0.2, 0.6), (450.0, 850.0), n_train, seed,
                               resolution=resolution)
    fields = np.column_stack([s.field.node_temperatures for s in snaps])
    X = np.array([(s.operating_point.inlet_velocity, s.operating_point.wall_heat_flux)
                  for s in snaps])
    basis = build_basis(SnapshotMatrix(fields), 0.95)
    surrogate = train_coefficient_regressor(coefficient_dataset(X, fields, basis, ("v", "q")),
                                            basis, kind="mlp", seed=seed)
    mesh = snaps[0].field.mesh
    rng = np.random.default_rng(seed + 1)
    queries = [OperatingPoint(v, q) for v, q in rng.uniform([0.2, 450.0], [0.6, 850.0],
                                                            (n_queries, 2))]
    timing = speedup_check(lambda op: surrogate.field([[op.inlet_velocity, op.wall_heat_flux]]),
                           lambda op: solve_steady(g, mat, op, mesh=mesh), queries, repeats=3)
    # accuracy of the surrogate field on the queries, in kelvin
    truth = np.column_stack([solve_steady(g, mat, op, mesh=mesh).node_temperatures
                             for op in queries])
    pred = surrogate.field([[op.inlet_velocity, op.wall_heat_flux] for op in queries])
    best = reconstruct(basis, project(basis, truth))
    return (resolution, mesh.n_dof, basis.k, timing["solver_seconds_per_query"],
            timing["rom_seconds_per_query"], timing["ratio"], float(np.abs(pred - truth).max()),
            float(np.abs(best - truth).max()))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolutions", type=float, nargs="+", default=[1000.0, 2000.0])
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--queries", type=int, default=50)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="results/speedup.csv")
    args = ap.parse_args()

    rows = []
    for res in args.resolutions:
        rows.append(measure(res, args.train, args.queries, args.seed))
        print("resolution {:.0f}: {} dof, k={}, solve {:.2e} s, rom {:.2e} s, ratio {:.0f}x, "
              "max error {:.3e} K (projection {:.3e} K)".format(*rows[-1]))
    header = ("resolution", "n_dof", "k", "solver_s", "rom_s", "ratio", "max_abs_error_K",
              "projection_error_K")
    store.atomic_write(args.out, store.dumps_csv(header, rows))


if __name__ == "__main__":
    main()
