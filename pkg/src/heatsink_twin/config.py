"""Run configuration: one JSON document per experiment.

Every section is optional except ``seed``.  Unknown keys are rejected so
a typo never silently falls back to a default.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidInputError, ParseError
from .regressors import MODEL_KINDS, hyperparameters_for
from .thermal_sim import DEFAULT_RESOLUTION, HeatsinkGeometry, MaterialProps

# Operating box that keeps the default heatsink inside the QoI ranges of the
# reference data set (h 4.2-9.9 W/m2K, T_max 300.5-306.4 K, Q 2.6-7.7 W).
DEFAULT_VELOCITY_RANGE = (0.2, 0.6)
DEFAULT_FLUX_RANGE = (450.0, 850.0)


@dataclass(frozen=True)
class SamplingConfig:
    velocity_range: tuple = DEFAULT_VELOCITY_RANGE
    flux_range: tuple = DEFAULT_FLUX_RANGE
    ambient_temperature: float = 300.0

    def __post_init__(self):
        for name in ("velocity_range", "flux_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 <= lo < hi):
                raise InvalidInputError(f"need 0 <= low < high, got ({lo}, {hi})")
        if not (math.isfinite(self.ambient_temperature) and self.ambient_temperature > 0):
            raise InvalidInputError("must be a positive temperature in K")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    samples: int = 1000
    geometry: HeatsinkGeometry = HeatsinkGeometry()
    material: MaterialProps = MaterialProps()
    sampling: SamplingConfig = SamplingConfig()
    resolution: float = DEFAULT_RESOLUTION
    energy_threshold: float = 0.95
    hyperparameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["sampling"] = {k: list(v) if isinstance(v, tuple) else v
                           for k, v in doc["sampling"].items()}
        return doc


def _section(cls, doc, prefix):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", prefix)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in doc:
        if key not in names:
            raise ParseError("unknown field", f"{prefix}.{key}")
    values = {}
    for key, raw in doc.items():
        if isinstance(raw, list):
            if len(raw) != 2 or not all(isinstance(v, (int, float)) for v in raw):
                raise ParseError("expected [low, high]", f"{prefix}.{key}")
            raw = (float(raw[0]), float(raw[1]))
        elif not isinstance(raw, (int, float)) or isinstance(raw, bool):
            raise ParseError(f"expected a number, got {raw!r}", f"{prefix}.{key}")
        values[key] = raw
    try:
        return cls(**values)
    except InvalidInputError as exc:
        raise ParseError(str(exc), prefix) from None


def config_from_dict(doc: dict, name: str = "config") -> RunConfig:
    if not isinstance(doc, dict):
        raise ParseError("expected a JSON object", name)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in doc:
        if key not in known:
            raise ParseError("unknown field", f"{name}.{key}")
    if "seed" not in doc:
        raise ParseError("missing field (seeds are mandatory)", f"{name}.seed")
    seed = doc["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ParseError(f"expected a non-negative integer, got {seed!r}", f"{name}.seed")
    kwargs = {"seed": seed}
    if "samples" in doc:
        samples = doc["samples"]
        if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1:
            raise ParseError(f"expected a positive integer, got {samples!r}", f"{name}.samples")
        kwargs["samples"] = samples
    for key, cls in (("geometry", HeatsinkGeometry), ("material", MaterialProps),
                     ("sampling", SamplingConfig)):
        if key in doc:
            kwargs[key] = _section(cls, doc[key], f"{name}.{key}")
    if "resolution" in doc:
        res = doc["resolution"]
        if not isinstance(res, (int, float)) or isinstance(res, bool) or res <= 0:
            raise ParseError(f"expected a positive number, got {res!r}", f"{name}.resolution")
        kwargs["resolution"] = float(res)
    if "energy_threshold" in doc:
        thr = doc["energy_threshold"]
        if not isinstance(thr, (int, float)) or isinstance(thr, bool) or not 0 < thr <= 1:
            raise ParseError(f"expected a number in (0, 1], got {thr!r}",
                             f"{name}.energy_threshold")
        kwargs["energy_threshold"] = float(thr)
    if "hyperparameters" in doc:
        hp = doc["hyperparameters"]
        if not isinstance(hp, dict):
            raise ParseError("expected an object", f"{name}.hyperparameters")
        for kind, overrides in hp.items():
            if kind not in MODEL_KINDS:
                raise ParseError(f"unknown model kind; expected one of {MODEL_KINDS}",
                                 f"{name}.hyperparameters.{kind}")
            if not isinstance(overrides, dict):
                raise ParseError("expected an object", f"{name}.hyperparameters.{kind}")
            try:
                hyperparameters_for(kind, overrides)
            except InvalidInputError as exc:
                raise ParseError(str(exc), f"{name}.hyperparameters.{kind}") from None
        kwargs["hyperparameters"] = hp
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None
    return config_from_dict(doc, str(path))
