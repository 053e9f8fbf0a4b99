"""On-disk formats.

* snapshot manifest / datasets: CSV, header row, LF, UTF-8
* matrices: ``rows cols`` header then one line per row
* POD bases: sectioned text (see ``save_basis``)
* models and reports: JSON documents carrying ``schema_version``

Floats are written with ``repr`` (shortest round-trip form), so every
save/load pair is bitwise for finite values.  Writes go to a temporary
file in the target directory and are renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError
from .pipeline import MetricsReport
from .pod import PodBasis, RomComponent, RomLibrary, is_orthonormal
from .regressors import (Dataset, KnnModel, MlpModel, MultiOutputModel, NormalizationParams,
                         SvrModel, TrainedModel, TreeModel, MODEL_KINDS)

SCHEMA_VERSION = 1

MANIFEST_COLUMNS = ("sample_id", "inlet_velocity_m_s", "wall_heat_flux_W_m2", "ambient_temp_K",
                    "heat_coef_W_m2K", "max_temp_K", "total_heat_W")
FEATURE_COLUMNS = ("inlet_velocity_m_s", "wall_heat_flux_W_m2")
TARGET_COLUMNS = ("heat_coef_W_m2K", "max_temp_K", "total_heat_W")
_NON_TARGET = ("sample_id", "ambient_temp_K")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x) -> str:
    return repr(float(x))


def _parse_float(token, locus):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", locus) from None


# -- matrices ---------------------------------------------------------------

def dumps_matrix(M) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(_fmt(v) for v in row) for row in M]
    return "\n".join(lines) + "\n"


def loads_matrix(text: str, name: str = "matrix") -> np.ndarray:
    lines = text.splitlines()
    if not lines:
        raise ParseError("missing header", f"{name}:1")
    head = lines[0].split()
    if len(head) != 2 or not all(t.isdigit() for t in head):
        raise ParseError(f"header must be 'rows cols', got {lines[0]!r}", f"{name}:1")
    rows, cols = int(head[0]), int(head[1])
    if len(lines) - 1 < rows:
        raise ParseError(f"expected {rows} rows, found {len(lines) - 1}", f"{name}: rows")
    out = np.empty((rows, cols))
    for i in range(rows):
        tokens = lines[i + 1].split()
        if len(tokens) != cols:
            raise ParseError(f"expected {cols} values, got {len(tokens)}", f"{name}:{i + 2}")
        out[i] = [_parse_float(t, f"{name}:{i + 2}") for t in tokens]
    return out


def save_matrix(path, M) -> None:
    atomic_write(path, dumps_matrix(M))


def load_matrix(path) -> np.ndarray:
    return loads_matrix(Path(path).read_text(encoding="utf-8"), str(path))


# -- CSV datasets -----------------------------------------------------------

def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, (int, np.integer, str)) else _fmt(v) for v in row])
    return buf.getvalue()


def write_manifest(path, snapshots) -> None:
    rows = []
    for i, s in enumerate(snapshots):
        op = s.operating_point
        rows.append((i, op.inlet_velocity, op.wall_heat_flux, op.ambient_temperature,
                     s.heat_coefficient, s.max_temperature, s.total_heat))
    atomic_write(path, dumps_csv(MANIFEST_COLUMNS, rows))


def read_csv(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, missing header row", f"{path}:1") from None
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names", f"{path}:1")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", f"{path}:{lineno}")
        rows.append([_parse_float(v, f"{path}:{lineno}") for v in row])
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def load_dataset(path, features=FEATURE_COLUMNS, targets=None) -> Dataset:
    """Read a CSV into a Dataset.

    ``targets=None`` takes every column that is not a feature, ``sample_id``
    or ``ambient_temp_K``.
    """
    header, data = read_csv(path)
    missing = [c for c in features if c not in header]
    if missing:
        raise ParseError(f"missing feature columns {missing}", f"{path}:1")
    if targets is None:
        targets = [c for c in header if c not in features and c not in _NON_TARGET]
    missing = [c for c in targets if c not in header]
    if missing or not targets:
        raise ParseError(f"missing target columns {missing or '(none)'}", f"{path}:1")
    if len(data) == 0:
        raise ParseError("no data rows", str(path))
    col = {name: i for i, name in enumerate(header)}
    X = data[:, [col[c] for c in features]]
    Y = data[:, [col[c] for c in targets]]
    return Dataset(X, Y, tuple(features), tuple(targets))


def snapshot_dataset(snapshots) -> Dataset:
    """The in-memory equivalent of ``load_dataset`` on a written manifest."""
    X = np.array([(s.operating_point.inlet_velocity, s.operating_point.wall_heat_flux)
                  for s in snapshots])
    Y = np.array([(s.heat_coefficient, s.max_temperature, s.total_heat) for s in snapshots])
    return Dataset(X, Y, FEATURE_COLUMNS, TARGET_COLUMNS)


def save_dataset(path, dataset: Dataset) -> None:
    header = ("sample_id", *dataset.feature_names, *dataset.target_names)
    rows = [(i, *x, *y) for i, (x, y) in enumerate(zip(dataset.X, dataset.Y))]
    atomic_write(path, dumps_csv(header, rows))


# -- POD basis --------------------------------------------------------------

_BASIS_SECTIONS = ("mean", "sigma", "modes")


def dumps_basis(basis: PodBasis) -> str:
    """Header ``POD-BASIS <version>``, a record ``n_dof k energy discarded``,
    then the sections mean (n_dof values), sigma (k values) and modes
    (n_dof * k values, column-major), one value per line."""
    out = [f"POD-BASIS {SCHEMA_VERSION}",
           f"{basis.n_dof} {basis.k} {_fmt(basis.energy_retained)} {_fmt(basis.discarded_energy)}",
           "mean"]
    out += [_fmt(v) for v in basis.mean_vector]
    out.append("sigma")
    out += [_fmt(v) for v in basis.singular_values]
    out.append("modes")
    out += [_fmt(v) for v in basis.modes.ravel(order="F")]
    return "\n".join(out) + "\n"


def loads_basis(text: str, name: str = "basis") -> PodBasis:
    lines = text.splitlines()
    if not lines or lines[0].split()[:1] != ["POD-BASIS"]:
        raise ParseError("missing 'POD-BASIS' header", f"{name}:1")
    version = lines[0].split()[1:2]
    if version != [str(SCHEMA_VERSION)]:
        raise ParseError(f"unknown schema_version {version}", f"{name}:1")
    if len(lines) < 2:
        raise ParseError("missing section 'header record'", name)
    rec = lines[1].split()
    if len(rec) != 4:
        raise ParseError("header record must be 'n_dof k energy discarded'", f"{name}:2")
    n_dof, k = int(rec[0]), int(rec[1])
    energy = _parse_float(rec[2], f"{name}:2")
    discarded = _parse_float(rec[3], f"{name}:2")
    sizes = {"mean": n_dof, "sigma": k, "modes": n_dof * k}
    pos = 2
    values = {}
    for section in _BASIS_SECTIONS:
        if pos >= len(lines) or lines[pos].strip() != section:
            raise ParseError(f"missing section '{section}'", f"{name}:{pos + 1}")
        pos += 1
        chunk = lines[pos:pos + sizes[section]]
        if len(chunk) != sizes[section]:
            raise ParseError(f"section '{section}' truncated: expected {sizes[section]} values, "
                             f"found {len(chunk)}", f"{name}:{pos + 1}")
        values[section] = np.array([_parse_float(t, f"{name}:{pos + i + 1}")
                                    for i, t in enumerate(chunk)])
        pos += sizes[section]
    modes = values["modes"].reshape((n_dof, k), order="F")
    zero_guard = k == 1 and not np.any(modes)
    if not zero_guard and not is_orthonormal(modes):
        raise ParseError("modes are not orthonormal", f"{name}: modes")
    return PodBasis(values["mean"], modes, values["sigma"], energy, discarded)


def save_basis(path, basis: PodBasis) -> None:
    atomic_write(path, dumps_basis(basis))


def load_basis(path) -> PodBasis:
    return loads_basis(Path(path).read_text(encoding="utf-8"), str(path))


# -- model documents --------------------------------------------------------

def _arr(a):
    return np.asarray(a).tolist()


def _inner_to_doc(inner):
    if isinstance(inner, TreeModel):
        return {"type": "tree", "feature": _arr(inner.feature), "threshold": _arr(inner.threshold),
                "left": _arr(inner.left), "right": _arr(inner.right), "value": _arr(inner.value),
                "max_depth": inner.max_depth, "min_leaf": inner.min_leaf}
    if isinstance(inner, KnnModel):
        return {"type": "knn", "X": _arr(inner.X), "Y": _arr(inner.Y), "k": inner.k}
    if isinstance(inner, SvrModel):
        return {"type": "svr", "support_vectors": _arr(inner.support_vectors),
                "dual_coef": _arr(inner.dual_coef), "bias": inner.bias, "gamma": inner.gamma,
                "C": inner.C, "epsilon": inner.epsilon, "iterations": inner.iterations,
                "violation": inner.violation}
    if isinstance(inner, MlpModel):
        return {"type": "mlp", "sizes": list(inner.sizes), "params": _arr(inner.params),
                "target_mean": _arr(inner.target_mean), "target_scale": _arr(inner.target_scale),
                "loss_history": list(inner.loss_history)}
    if isinstance(inner, MultiOutputModel):
        doc = {"type": "multi", "strategy": inner.strategy, "base": inner.base,
               "models": [_inner_to_doc(m) for m in inner.models], "chain_scaling": None}
        if inner.chain_scaling is not None:
            doc["chain_scaling"] = {"min": _arr(inner.chain_scaling.minimum),
                                    "max": _arr(inner.chain_scaling.maximum)}
        return doc
    raise TypeError(f"cannot serialize {type(inner).__name__}")


def _field(doc, key, locus):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise ParseError(f"missing field '{key}'", locus) from None


def _inner_from_doc(doc, locus):
    kind = _field(doc, "type", locus)
    f = lambda key: _field(doc, key, f"{locus}.{key}")  # noqa: E731
    a = lambda key, dtype=float: np.array(f(key), dtype=dtype)  # noqa: E731
    if kind == "tree":
        value = a("value")
        return TreeModel(a("feature", np.int64), a("threshold"), a("left", np.int64),
                         a("right", np.int64), value.reshape(len(value), -1),
                         int(f("max_depth")), int(f("min_leaf")))
    if kind == "knn":
        return KnnModel(a("X"), a("Y"), int(f("k")))
    if kind == "svr":
        sv = a("support_vectors")
        return SvrModel(sv.reshape(len(sv), -1) if sv.size else sv.reshape(0, 0), a("dual_coef"),
                        float(f("bias")), float(f("gamma")), float(f("C")), float(f("epsilon")),
                        int(f("iterations")), float(f("violation")))
    if kind == "mlp":
        return MlpModel(tuple(f("sizes")), a("params"), a("target_mean"), a("target_scale"),
                        list(f("loss_history")))
    if kind == "multi":
        scaling = f("chain_scaling")
        if scaling is not None:
            scaling = NormalizationParams(np.array(_field(scaling, "min", f"{locus}.chain_scaling")),
                                          np.array(_field(scaling, "max", f"{locus}.chain_scaling")))
        models = tuple(_inner_from_doc(m, f"{locus}.models[{i}]")
                       for i, m in enumerate(f("models")))
        return MultiOutputModel(f("strategy"), f("base"), models, scaling)
    raise ParseError(f"unknown parameter type {kind!r}", f"{locus}.type")


def model_to_doc(model: TrainedModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model_kind": model.kind,
        "hyperparameters": model.hyperparameters,
        "seed": model.seed,
        "feature_names": list(model.feature_names),
        "target_names": list(model.target_names),
        "normalization": {"min": _arr(model.normalization.minimum),
                          "max": _arr(model.normalization.maximum)},
        "parameters": _inner_to_doc(model.model),
    }


def model_from_doc(doc: dict, name: str = "model") -> TrainedModel:
    version = _field(doc, "schema_version", f"{name}.schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unknown schema_version {version!r}", f"{name}.schema_version")
    kind = _field(doc, "model_kind", f"{name}.model_kind")
    if kind not in MODEL_KINDS:
        raise ParseError(f"unknown model_kind {kind!r}", f"{name}.model_kind")
    norm = _field(doc, "normalization", f"{name}.normalization")
    normalization = NormalizationParams(
        np.array(_field(norm, "min", f"{name}.normalization.min"), dtype=float),
        np.array(_field(norm, "max", f"{name}.normalization.max"), dtype=float))
    inner = _inner_from_doc(_field(doc, "parameters", f"{name}.parameters"), f"{name}.parameters")
    features = tuple(_field(doc, "feature_names", f"{name}.feature_names"))
    if len(features) != len(normalization.minimum):
        raise ParseError("normalization width does not match feature_names",
                         f"{name}.normalization")
    return TrainedModel(kind, normalization, inner, features,
                        tuple(_field(doc, "target_names", f"{name}.target_names")),
                        dict(_field(doc, "hyperparameters", f"{name}.hyperparameters")),
                        int(doc.get("seed", 0)))


def _dumps_json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _loads_json(text, name):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"{name}:{exc.lineno}") from None


def save_model(path, model: TrainedModel) -> None:
    atomic_write(path, _dumps_json(model_to_doc(model)))


def load_model(path) -> TrainedModel:
    return model_from_doc(_loads_json(Path(path).read_text(encoding="utf-8"), str(path)), str(path))


# -- reports ----------------------------------------------------------------

def report_to_doc(report: MetricsReport) -> dict:
    return {"schema_version": SCHEMA_VERSION, "report": report.to_dict()}


def save_report(path, report: MetricsReport) -> None:
    atomic_write(path, _dumps_json(report_to_doc(report)))


def load_report(path) -> MetricsReport:
    doc = _loads_json(Path(path).read_text(encoding="utf-8"), str(path))
    version = _field(doc, "schema_version", f"{path}.schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unknown schema_version {version!r}", f"{path}.schema_version")
    try:
        return MetricsReport.from_dict(_field(doc, "report", f"{path}.report"))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed report: {exc}", f"{path}.report") from None


# -- ROM library -------------------------------------------------------------

def save_library(path, library: RomLibrary, basis_files: dict) -> None:
    """Index document; bases live in their own files, named relative to ``path``."""
    components = []
    for cid in library.ids():
        comp = library.lookup(cid)
        components.append({"component_id": cid, "basis_file": basis_files[cid],
                           "provenance": comp.provenance})
    atomic_write(path, _dumps_json({"schema_version": SCHEMA_VERSION, "components": components}))


def load_library(path) -> RomLibrary:
    path = Path(path)
    doc = _loads_json(path.read_text(encoding="utf-8"), str(path))
    version = _field(doc, "schema_version", f"{path}.schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unknown schema_version {version!r}", f"{path}.schema_version")
    comps = []
    for i, entry in enumerate(_field(doc, "components", f"{path}.components")):
        locus = f"{path}.components[{i}]"
        basis = load_basis(path.parent / _field(entry, "basis_file", f"{locus}.basis_file"))
        comps.append(RomComponent(_field(entry, "component_id", f"{locus}.component_id"), basis,
                                  dict(entry.get("provenance", {}))))
    return RomLibrary(comps)
