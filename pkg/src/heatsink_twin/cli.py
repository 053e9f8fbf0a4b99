"""Command-line entry point: simulate -> build-rom -> train / evaluate -> predict / report.

Exit codes: 0 success, 1 invalid input (flags, config, files), 2 computation
failure.  Progress goes to stderr; stdout carries only requested output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import store
from .config import RunConfig, config_from_dict
from .errors import (ConflictError, DegenerateFieldError, InvalidInputError, NotFoundError,
                     ParseError, ShapeError, SolverFailure, TrainingFailure)
from .pipeline import SplitSpec, evaluate_all, render_mae_table, render_prediction_table
from .pod import RomComponent, RomLibrary, SnapshotMatrix, build_basis, geometry_hash, project
from .regressors import MODEL_KINDS, fit_model, predict
from .thermal_sim import generate_snapshots

MANIFEST = "manifest.csv"
FIELDS = "fields.txt"
RUN_CONFIG = "run_config.json"
BASIS = "basis.txt"
COEFFICIENTS = "coefficients.csv"
LIBRARY = "library.json"

EXIT_INVALID = 1
EXIT_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _log(message):
    print(message, file=sys.stderr, flush=True)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be >= 0, got {text}")
    return value


def _read_config_doc(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None


def _resolve_config(args) -> RunConfig:
    """Config file (if any) with command-line flags layered on top."""
    doc = _read_config_doc(args.config) if args.config is not None else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    if getattr(args, "samples", None) is not None:
        doc["samples"] = args.samples
    if "seed" not in doc:
        raise InvalidInputError("a seed is required: pass --seed or set it in --config")
    return config_from_dict(doc, str(args.config or "flags"))


def _overrides(args):
    if getattr(args, "config", None) is None:
        return {}
    doc = _read_config_doc(args.config)
    doc.setdefault("seed", 0)  # only the hyperparameter section matters here
    return config_from_dict(doc, str(args.config)).hyperparameters


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args):
    cfg = _resolve_config(args)
    out = Path(args.out)
    _log(f"simulating {cfg.samples} operating points (seed {cfg.seed}, jobs {args.jobs})")
    snaps = generate_snapshots(cfg.geometry, cfg.material, cfg.sampling.velocity_range,
                               cfg.sampling.flux_range, cfg.samples, cfg.seed,
                               cfg.sampling.ambient_temperature, cfg.resolution, jobs=args.jobs)
    fields = np.column_stack([s.field.node_temperatures for s in snaps])
    store.write_manifest(out / MANIFEST, snaps)
    store.save_matrix(out / FIELDS, fields)
    store.atomic_write(out / RUN_CONFIG, json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
    _log(f"wrote {out / MANIFEST} and {out / FIELDS} ({fields.shape[0]} dof)")


def cmd_build_rom(args):
    src = Path(args.snapshots)
    fields = store.load_matrix(src / FIELDS)
    dataset = store.load_dataset(src / MANIFEST)
    if fields.shape[1] != len(dataset):
        raise ShapeError(f"{FIELDS} has {fields.shape[1]} snapshots, {MANIFEST} has {len(dataset)}")
    cfg_doc = json.loads((src / RUN_CONFIG).read_text(encoding="utf-8")) \
        if (src / RUN_CONFIG).exists() else {}
    basis = build_basis(SnapshotMatrix(fields), args.energy)
    _log(f"kept k={basis.k} modes, {basis.energy_retained:.6f} of the energy")
    coeffs = project(basis, fields).T
    header = ("sample_id", *dataset.feature_names, *(f"a{i + 1}" for i in range(basis.k)))
    rows = [(i, *x, *a) for i, (x, a) in enumerate(zip(dataset.X, coeffs))]

    ghash = geometry_hash(cfg_doc.get("geometry"), cfg_doc.get("resolution"))
    provenance = {"geometry_hash": ghash, "n_snapshots": int(fields.shape[1]),
                  "energy_threshold": args.energy, "k": basis.k,
                  "seed": cfg_doc.get("seed"), "source": FIELDS}
    component = RomComponent(f"heatsink-{ghash}", basis, provenance)
    out = Path(args.out)
    store.save_basis(out / BASIS, basis)
    store.atomic_write(out / COEFFICIENTS, store.dumps_csv(header, rows))
    store.save_library(out / LIBRARY, RomLibrary([component]), {component.component_id: BASIS})


def cmd_train(args):
    dataset = store.load_dataset(args.data)
    overrides = _overrides(args).get(args.model)
    _log(f"training {args.model} on {len(dataset)} rows")
    model = fit_model(dataset, args.model, seed=args.seed, overrides=overrides, jobs=args.jobs)
    store.save_model(args.out, model)


def cmd_evaluate(args):
    dataset = store.load_dataset(args.data)
    kinds = tuple(args.models.split(",")) if args.models else MODEL_KINDS
    for kind in kinds:
        if kind not in MODEL_KINDS:
            raise InvalidInputError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    split = SplitSpec(args.train_fraction, args.folds, args.repeats, args.seed)
    report = evaluate_all(dataset, kinds, split, table_samples=min(args.samples_shown,
                                                                    len(dataset) // 5),
                          overrides=_overrides(args), cross_validate=not args.no_cv,
                          progress=_log)
    store.save_report(args.report, report)
    failed = [r.kind for r in report.models if r.error]
    if failed:
        _log(f"models failed: {', '.join(failed)}")


def cmd_predict(args):
    model = store.load_model(args.model)
    header, data = store.read_csv(args.input)
    missing = [c for c in model.feature_names if c not in header]
    if missing:
        raise ParseError(f"missing feature columns {missing}", f"{args.input}:1")
    col = {name: i for i, name in enumerate(header)}
    X = data[:, [col[c] for c in model.feature_names]]
    ids = data[:, col["sample_id"]].astype(int) if "sample_id" in col else np.arange(len(X))
    Y = predict(model, X)
    rows = [(int(i), *y) for i, y in zip(ids, Y)]
    store.atomic_write(args.out, store.dumps_csv(("sample_id", *model.target_names), rows))


def cmd_report(args):
    report = store.load_report(args.metrics)
    sys.stdout.write(render_mae_table(report))
    shown = [r for r in report.models if r.predicted and not r.error]
    if shown:
        kind = args.model or ("svr-chained" if any(r.kind == "svr-chained" for r in shown)
                              else shown[0].kind)
        sys.stdout.write("\n" + render_prediction_table(report, kind))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatsink-twin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate the snapshot data set")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--samples", type=_positive_int, help="number of operating points (1000)")
    p.add_argument("--seed", type=_seed, help="overrides the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("build-rom", help="POD basis and coefficient table from snapshots")
    p.add_argument("--snapshots", required=True, help="directory written by simulate")
    p.add_argument("--energy", type=float, default=0.95)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_rom)

    p = sub.add_parser("train", help="fit one model configuration")
    p.add_argument("--data", required=True, help="CSV with feature and target columns")
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON run configuration (hyperparameter overrides)")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="hold-out and repeated k-fold comparison")
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--repeats", type=_positive_int, default=3)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--samples-shown", type=int, default=3)
    p.add_argument("--models", help="comma-separated subset of " + ",".join(MODEL_KINDS))
    p.add_argument("--no-cv", action="store_true", help="skip cross-validation")
    p.add_argument("--config", help="JSON run configuration (hyperparameter overrides)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="apply a saved model to a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="render the tables of a metrics report")
    p.add_argument("--metrics", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, help="model for the prediction table")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InvalidInputError, ParseError, ShapeError, ConflictError, NotFoundError,
            FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        _log(f"error: {exc}")
        return EXIT_INVALID
    except (SolverFailure, TrainingFailure, DegenerateFieldError) as exc:
        _log(f"computation failed: {exc}")
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
