"""Scenario files: strict JSON schema validation plus semantic checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import InvalidInputError, ScaleGuardError
from .fock import dim_h
from .serialize import complex_matrix, subject_from_json, component_from_json
from .variety import IdealSpec, VarietySpec

DEFAULT_TOLERANCE = 1e-9
DEFAULT_RANK_THRESHOLD = 1e-10
DEFAULT_SCALE_CAP = 20000
TASKS = ("dims", "hilbert", "angles", "essnorm", "closedness", "similarity")


@lru_cache(maxsize=1)
def scenario_schema() -> dict:
    text = resources.files("dalab").joinpath("schemas/scenario.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass
class Scenario:
    d: int
    max_degree: int
    subject: object
    tasks: tuple
    tolerance: float = DEFAULT_TOLERANCE
    rank_threshold: float = DEFAULT_RANK_THRESHOLD
    scale_cap: int = DEFAULT_SCALE_CAP
    companion: object = None
    map_matrix: object = None
    map_source: object = None
    p_list: tuple = (1.5,)
    pairs: tuple | None = None
    out_dir: str | None = None
    cache_dir: str | None = None
    parallelism: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def expanded_tasks(self) -> tuple:
        if "full-report" not in self.tasks:
            return tuple(t for t in TASKS if t in self.tasks)
        out = ["dims", "hilbert", "essnorm"]
        if isinstance(self.subject, VarietySpec) and self.subject.components is not None:
            if len(self.subject.components) > 1:
                out += ["angles", "closedness"]
        if self.map_matrix is not None:
            out.append("similarity")
        return tuple(t for t in TASKS if t in set(out) | set(self.tasks))

    @property
    def commutator_pairs(self) -> tuple:
        if self.pairs is not None:
            return self.pairs
        return tuple((i, j) for i in range(self.d) for j in range(i, self.d))

    def with_overrides(self, max_degree: int | None = None, p_list=None) -> "Scenario":
        raw = dict(self.raw)
        if max_degree is not None:
            raw["maxDegree"] = max_degree
        if p_list is not None:
            raw["pList"] = list(p_list)
        return scenario_from_dict(raw)


def _path(err: jsonschema.ValidationError) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def validate_schema(obj):
    validator = jsonschema.Draft202012Validator(scenario_schema())
    errors = sorted(validator.iter_errors(obj), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        lines = [f"{_path(e)}: {e.message}" for e in errors]
        raise InvalidInputError("scenario schema violation:\n  " + "\n  ".join(lines))


def scenario_from_dict(obj: dict) -> Scenario:
    validate_schema(obj)
    d, nmax = obj["d"], obj["maxDegree"]
    cap = obj.get("scaleCap", DEFAULT_SCALE_CAP)
    # blocks at the top degree touch H_{maxDegree}
    size = dim_h(d, nmax)
    if size > cap:
        raise ScaleGuardError(f"scale guard: dim H_{nmax} = {size} in d={d} exceeds the cap {cap}")
    subject = subject_from_json(obj["subject"], d, "$.subject")
    companion = subject_from_json(obj["companion"], d, "$.companion") if "companion" in obj else None
    map_matrix = map_source = None
    if "map" in obj:
        map_matrix = complex_matrix(obj["map"]["matrix"], "$.map.matrix")
        map_source = tuple(component_from_json(c, f"$.map.source.components[{k}]")
                           for k, c in enumerate(obj["map"]["source"]["components"]))
        if map_matrix.shape[0] != d:
            raise InvalidInputError(f"$.map.matrix: expected {d} rows, got {map_matrix.shape[0]}")
    tasks = tuple(obj["tasks"])
    if "similarity" in tasks and map_matrix is None:
        raise InvalidInputError("$.map: task 'similarity' needs a map")
    if ("angles" in tasks or "closedness" in tasks or "similarity" in tasks) and not (
            isinstance(subject, VarietySpec) and subject.components is not None):
        raise InvalidInputError("$.subject: angles, closedness and similarity need a component list")
    if "hilbert" in tasks and companion is not None and not isinstance(companion, (IdealSpec, VarietySpec)):
        raise InvalidInputError("$.companion: unsupported companion")
    pairs = None
    if "pairs" in obj:
        pairs = tuple((int(a), int(b)) for a, b in obj["pairs"])
        for k, (a, b) in enumerate(pairs):
            if a >= d or b >= d:
                raise InvalidInputError(f"$.pairs[{k}]: variable index out of range for d={d}")
    return Scenario(
        d=d,
        max_degree=nmax,
        subject=subject,
        tasks=tasks,
        tolerance=float(obj.get("tolerance", DEFAULT_TOLERANCE)),
        rank_threshold=float(obj.get("rankThreshold", DEFAULT_RANK_THRESHOLD)),
        scale_cap=cap,
        companion=companion,
        map_matrix=map_matrix,
        map_source=map_source,
        p_list=tuple(float(p) for p in obj.get("pList", [1.5])),
        pairs=pairs,
        out_dir=obj.get("outputs", {}).get("dir"),
        cache_dir=obj.get("cacheDir"),
        parallelism=int(obj.get("parallelism", 1)),
        raw=obj,
    )


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read scenario {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(obj)
